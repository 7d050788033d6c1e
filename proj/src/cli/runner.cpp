#include "gbridge/cli/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "gbridge/core/error.hpp"
#include "gbridge/core/estimate.hpp"
#include "gbridge/core/mcmc.hpp"
#include "gbridge/core/path_io.hpp"
#include "gbridge/core/replicate.hpp"
#include "gbridge/kernels/kernels.hpp"
#include "gbridge/sde/diagnostics.hpp"

namespace gbridge::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// What the runner keeps of each sampled path.
struct Record {
  double log_psi = kNaN;
  double log_constant = 0.0;
  double sup_V = 0.0;
  bool hit = false;
  bool valid = false;
  std::vector<double> obs;
  std::optional<Path> path;

  double log_weight() const { return valid ? log_psi + log_constant : kNaN; }
};

// Backend-specific hooks behind a common sampling pipeline.
struct Backend {
  PathSampler sample;
  std::function<std::vector<double>(const WeightedPath&)> observe;
  std::vector<std::string> obs_names;
  double estimate_time = 0.0;
  // Discrete backends: states whose marginal probabilities are reported.
  std::vector<std::int64_t> states;
  std::optional<H0Pair> h0;
  std::vector<double> oracle_marginal;
  json info = json::object();
  // Diffusion backends.
  std::function<WeightedPath(std::span<const Eigen::VectorXd>)> from_innovations;
  std::size_t steps = 0;
  int noise_dim = 0;
  std::function<json(const std::vector<Record>&)> diagnostics;
};

Record to_record(const WeightedPath& wp, const Backend& be, bool keep_path) {
  Record r;
  r.log_psi = wp.log_psi;
  r.log_constant = wp.log_constant;
  r.sup_V = wp.sup_V;
  r.hit = wp.endpoint_hit;
  r.valid = wp.valid && std::isfinite(wp.log_psi);
  r.obs = be.observe(wp);
  if (keep_path) r.path = wp.path;
  return r;
}

double jump_state_at(const WeightedPath& wp, double t) {
  return static_cast<double>(std::get<PiecewiseConstantPath>(wp.path).state_at(t));
}

Backend make_poisson(const ExperimentConfig& cfg) {
  auto spec = std::make_shared<poisson::InhomPoissonSpec>(build_poisson(cfg.model));
  Backend be;
  be.estimate_time = cfg.estimate_time.value_or(0.5 * spec->T());
  const double t = be.estimate_time;
  be.sample = [spec](Rng& rng) { return poisson::simulate_guided_bridge(*spec, rng); };
  be.observe = [t](const WeightedPath& wp) { return std::vector<double>{jump_state_at(wp, t)}; };
  be.obs_names = {"state"};
  for (auto x = spec->x0(); x <= spec->xT(); ++x) be.states.push_back(x);
  const OracleTable tab = poisson::exact_h_table(*spec, {0.0});
  be.h0 = H0Pair{std::log(tab.h(0, spec->x0())), poisson::htilde_log(*spec, 0.0, spec->x0())};
  const Eigen::VectorXd m = poisson::bridge_marginal(*spec, t);
  be.oracle_marginal.assign(m.data(), m.data() + m.size());
  be.info = {{"x0", spec->x0()}, {"xT", spec->xT()}, {"T", spec->T()},
             {"lambda_tilde", spec->lambda_tilde()}, {"warnings", spec->warnings()}};
  return be;
}

Backend make_delaunay(const ExperimentConfig& cfg, const std::string& out_dir) {
  auto spec = std::make_shared<delaunay::DelaunayBridgeSpec>(build_delaunay(cfg.model, cfg.seed));
  const auto& g = spec->graph();
  Backend be;
  be.estimate_time = cfg.estimate_time.value_or(0.5 * spec->T());
  const double t = be.estimate_time;
  be.sample = [spec](Rng& rng) { return delaunay::simulate_guided_jump(*spec, rng); };
  be.observe = [spec, t](const WeightedPath& wp) {
    const int v = static_cast<int>(jump_state_at(wp, t));
    const auto& p = spec->graph().point(v);
    return std::vector<double>{static_cast<double>(v), p.x, p.y};
  };
  be.obs_names = {"vertex", "x", "y"};
  if (g.vertex_count() <= cfg.oracle_max_vertices) {
    for (std::size_t v = 0; v < g.vertex_count(); ++v) be.states.push_back(static_cast<std::int64_t>(v));
    const OracleTable tab = delaunay::exact_h_small_graph(g, spec->T(), spec->xT(), {0.0});
    const double a = spec->a_tilde(), T = spec->T();
    const double log_ht0 = -std::log(2.0 * std::numbers::pi * a * T) -
                           spec->target_sq_distance(spec->x0()) / (2.0 * a * T);
    be.h0 = H0Pair{std::log(tab.h(0, spec->x0())), log_ht0};
    const Eigen::VectorXd m = delaunay::bridge_marginal(*spec, t);
    be.oracle_marginal.assign(m.data(), m.data() + m.size());
  }
  const auto bad = delaunay::greedy_neighbor_violations(g, spec->xT());
  be.info = {{"vertices", g.vertex_count()},
             {"edges", g.edge_count()},
             {"max_edge_length", g.max_edge_length()},
             {"x0", spec->x0()},
             {"xT", spec->xT()},
             {"T", spec->T()},
             {"a_tilde", spec->a_tilde()},
             {"greedy_violations", bad}};
  std::ofstream gj(fs::path(out_dir) / "graph.json");
  gj << delaunay::graph_to_json(g).dump() << '\n';
  return be;
}

Backend make_diffusion(const ExperimentConfig& cfg, sde::SdeModel model, double tol_end) {
  auto m = std::make_shared<sde::SdeModel>(std::move(model));
  auto grid = std::make_shared<std::vector<double>>(sde::bridge_grid(m->T, cfg.grid_steps));
  auto tables = std::make_shared<sde::BackwardTables>(sde::solve_backward_tables(m->aux, *grid));
  const sde::SimulationOptions opt{tol_end};
  Backend be;
  be.estimate_time = cfg.estimate_time.value_or(0.5 * m->T);
  const double t = be.estimate_time;
  be.steps = cfg.grid_steps;
  be.noise_dim = m->spec.noise_dim;
  be.sample = [m, grid, tables, opt](Rng& rng) {
    return sde::simulate_guided_sde(m->spec, *tables, m->aux, *grid, rng, opt);
  };
  be.from_innovations = [m, grid, tables, opt](std::span<const Eigen::VectorXd> z) {
    return sde::simulate_guided_sde(m->spec, *tables, m->aux, *grid, z, opt);
  };
  be.observe = [t](const WeightedPath& wp) {
    const Eigen::VectorXd& x = std::get<GridPath>(wp.path).value_near(t);
    return std::vector<double>(x.data(), x.data() + x.size());
  };
  for (int k = 0; k < m->spec.dim; ++k) be.obs_names.push_back("x" + std::to_string(k));
  be.diagnostics = [m, tables](const std::vector<Record>& recs) {
    json out = json::object();
    double lmin = std::numeric_limits<double>::infinity(), lmax = 0, b = 0, c = 0, d = 0;
    std::size_t n = 0;
    for (const auto& r : recs) {
      if (!r.path || !r.valid) continue;
      const auto rep = sde::assumption_diagnostics(m->spec, *tables, m->aux, m->delta,
                                                   std::get<GridPath>(*r.path));
      lmin = std::min(lmin, rep.min_scaled_lambda_min);
      lmax = std::max(lmax, rep.max_scaled_lambda_max);
      b = std::max(b, rep.max_drift_mismatch);
      c = std::max(c, rep.max_trace_a);
      d = std::max(d, rep.max_diffusion_ratio);
      ++n;
    }
    if (n == 0) return out;
    out = {{"paths_checked", n},
           {"min_scaled_lambda_min", lmin},
           {"max_scaled_lambda_max", lmax},
           {"max_drift_mismatch", b},
           {"max_trace_a", c},
           {"max_diffusion_ratio", d}};
    return out;
  };
  be.info = {{"model", m->name}, {"T", m->T}, {"grid_steps", cfg.grid_steps},
             {"last_step", grid->back() - (*grid)[grid->size() - 2]}, {"tol_end", tol_end}};
  return be;
}

Backend make_backend(const ExperimentConfig& cfg, const std::string& out_dir) {
  switch (cfg.backend) {
    case BackendKind::Poisson: return make_poisson(cfg);
    case BackendKind::Delaunay: return make_delaunay(cfg, out_dir);
    case BackendKind::Sde:
      return make_diffusion(cfg, build_sde(cfg.model), cfg.model.value("tol_end", 0.05));
    case BackendKind::Landmarks: {
      const LandmarkSetup s = parse_landmarks(cfg.model);
      const auto rep = landmarks::validate_noise_rank(s.noise, s.initial.n(), s.initial.d(), s.qT);
      if (!rep.passes) throw CliError(kValidationFailed, "validation_failed", rep.message);
      Backend be = make_diffusion(cfg, build_landmarks(s), cfg.model.value("tol_end", 0.05));
      be.info["noise_rank"] = {{"J", rep.J}, {"nd", rep.nd}, {"lambda_min", rep.lambda_min}};
      return be;
    }
  }
  throw CliError(kUnknownBackend, "unknown_backend", "unknown backend");
}

json report_json(const EstimateReport& r) {
  return {{"estimate", r.estimate},
          {"std_error", r.std_error},
          {"n_samples", r.n_samples},
          {"n_invalid", r.n_invalid},
          {"ess", r.effective_sample_size}};
}

double quantile(std::vector<double> v, double q) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()))) - 1;
  return v[std::min(k, v.size() - 1)];
}

// Summary pieces shared by all samplers.
json path_statistics(const std::vector<Record>& recs) {
  std::size_t hits = 0, invalid = 0;
  std::vector<double> sv, lw;
  for (const auto& r : recs) {
    hits += r.hit;
    invalid += !r.valid;
    sv.push_back(r.sup_V);
    if (r.valid) lw.push_back(r.log_weight());
  }
  const double n = static_cast<double>(recs.size());
  json s = {{"n_paths", recs.size()},
            {"n_invalid", invalid},
            {"endpoint_hit_fraction", n > 0 ? static_cast<double>(hits) / n : 0.0},
            {"sup_V", {{"max", sv.empty() ? kNaN : *std::max_element(sv.begin(), sv.end())},
                       {"p99", quantile(sv, 0.99)}}}};
  if (!lw.empty())
    s["log_weight"] = {{"min", *std::min_element(lw.begin(), lw.end())},
                       {"max", *std::max_element(lw.begin(), lw.end())}};
  return s;
}

json importance_summary(const std::vector<Record>& recs, const Backend& be) {
  std::vector<double> lw(recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) lw[i] = recs[i].log_weight();
  json est = json::object();
  std::vector<double> f(recs.size());
  for (std::size_t k = 0; k < be.obs_names.size(); ++k) {
    for (std::size_t i = 0; i < recs.size(); ++i) f[i] = recs[i].obs[k];
    est["mean_" + be.obs_names[k]] =
        report_json(importance_estimate(lw, f, Normalization::SelfNormalized));
  }
  json out = {{"time", be.estimate_time}, {"self_normalized", est}};
  std::vector<double> ones(recs.size(), 1.0);
  out["ess"] = importance_estimate(lw, ones, Normalization::SelfNormalized).effective_sample_size;
  if (be.h0) {
    out["normalization"] = report_json(importance_estimate(lw, ones, Normalization::ExactH0, be.h0));
    out["log_h0"] = be.h0->log_h0;
    out["log_htilde0"] = be.h0->log_htilde0;
  }
  if (!be.states.empty()) {
    json marg = json::array();
    for (std::size_t s = 0; s < be.states.size(); ++s) {
      const double x = static_cast<double>(be.states[s]);
      for (std::size_t i = 0; i < recs.size(); ++i) f[i] = recs[i].obs[0] == x ? 1.0 : 0.0;
      const auto sn = importance_estimate(lw, f, Normalization::SelfNormalized);
      json row = {{"state", be.states[s]}, {"self_normalized", report_json(sn)}};
      if (be.h0) row["exact_h0"] = report_json(importance_estimate(lw, f, Normalization::ExactH0, be.h0));
      if (s < be.oracle_marginal.size()) row["oracle"] = be.oracle_marginal[s];
      marg.push_back(std::move(row));
    }
    out["marginal"] = std::move(marg);
  }
  return out;
}

json chain_summary(const std::vector<Record>& recs, const Backend& be) {
  json est = json::object();
  const double n = static_cast<double>(recs.size());
  for (std::size_t k = 0; k < be.obs_names.size(); ++k) {
    double s = 0.0, s2 = 0.0;
    for (const auto& r : recs) {
      s += r.obs[k];
      s2 += r.obs[k] * r.obs[k];
    }
    const double mean = s / n;
    const double var = n > 1 ? std::max(0.0, (s2 - n * mean * mean) / (n - 1)) : 0.0;
    est["mean_" + be.obs_names[k]] = {{"estimate", mean}, {"naive_std_error", std::sqrt(var / n)}};
  }
  json out = {{"time", be.estimate_time}, {"chain_average", est}};
  if (!be.states.empty()) {
    json marg = json::array();
    for (std::size_t s = 0; s < be.states.size(); ++s) {
      double c = 0.0;
      for (const auto& r : recs) c += r.obs[0] == static_cast<double>(be.states[s]);
      json row = {{"state", be.states[s]}, {"chain_frequency", c / n}};
      if (s < be.oracle_marginal.size()) row["oracle"] = be.oracle_marginal[s];
      marg.push_back(std::move(row));
    }
    out["marginal"] = std::move(marg);
  }
  return out;
}

void ensure_writable_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "paths", ec);
  if (ec)
    throw CliError(kUnwritableOutput, "unwritable_output",
                   "cannot create output directory " + dir + ": " + ec.message());
  const fs::path probe = fs::path(dir) / "manifest.json";
  std::ofstream f(probe, std::ios::app);
  if (!f) throw CliError(kUnwritableOutput, "unwritable_output", "cannot write to " + dir);
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::trunc);
  if (!f) throw CliError(kUnwritableOutput, "unwritable_output", "cannot write " + p.string());
  f << content;
  if (!f) throw CliError(kUnwritableOutput, "unwritable_output", "write failed for " + p.string());
}

std::string id_name(std::size_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "path_%06zu.csv", id);
  return buf;
}

// JSON has no inf/nan, so non-finite values become strings. Doubles are
// printed round-trip exact (shortest form of at most 17 digits).
std::string dump_json(const json& j) {
  json copy = j;
  std::function<void(json&)> walk = [&](json& v) {
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (!std::isfinite(d)) v = std::isnan(d) ? json("nan") : json(d > 0 ? "inf" : "-inf");
    } else if (v.is_structured()) {
      for (auto& e : v) walk(e);
    }
  };
  walk(copy);
  return copy.dump(2) + "\n";
}

}  // namespace

std::string resolve_output_dir(const ExperimentConfig& cfg, const RunOptions& opt) {
  if (opt.out) return *opt.out;
  if (const char* env = std::getenv("BRIDGESIM_OUT"); env && *env) return env;
  if (!cfg.output.empty()) return cfg.output;
  return "bridgesim_out";
}

json run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream* log) {
  ensure_writable_dir(out_dir);
  const fs::path dir(out_dir);
  write_file(dir / "manifest.json",
             dump_json({{"tool", "bridgesim"},
                     {"version", kVersion},
                     {"backend", to_string(cfg.backend)},
                     {"sampler", to_string(cfg.sampler.kind)},
                     {"seed", cfg.seed},
                     {"config", cfg.raw}}));

  Backend be = make_backend(cfg, out_dir);
  std::vector<Record> recs;
  json summary = {{"backend", to_string(cfg.backend)},
                  {"sampler", to_string(cfg.sampler.kind)},
                  {"seed", cfg.seed},
                  {"model", be.info}};
  const std::size_t keep = cfg.paths_to_write;

  switch (cfg.sampler.kind) {
    case SamplerKind::Importance: {
      if (log) *log << "sampling " << cfg.sampler.n_paths << " guided paths\n";
      recs = run_replicates(
          cfg.sampler.n_paths, cfg.seed,
          [&](Rng& rng, std::size_t i) {
            WeightedPath wp = be.sample(rng);
            return to_record(wp, be, i < keep);
          },
          cfg.threads);
      summary["estimates"] = importance_summary(recs, be);
      break;
    }
    case SamplerKind::MhIndependence: {
      if (log) *log << "running independence sampler for " << cfg.sampler.n_iter << " iterations\n";
      const ChainResult ch = mh_independence_chain(be.sample, cfg.sampler.n_iter, cfg.seed);
      for (std::size_t i = 0; i < ch.chain.size(); ++i) recs.push_back(to_record(ch.chain[i], be, i < keep));
      summary["acceptance_rate"] = ch.acceptance_rate;
      summary["invalid_proposals"] = ch.invalid_proposals;
      summary["estimates"] = chain_summary(recs, be);
      break;
    }
    case SamplerKind::Pcn: {
      if (!be.from_innovations)
        throw CliError(kValidationFailed, "validation_failed", "pcn needs a diffusion backend");
      if (log) *log << "running pCN for " << cfg.sampler.n_iter << " iterations\n";
      Rng init(cfg.seed, std::uint64_t{1} << 63);
      auto z0 = sde::draw_innovations(be.steps, be.noise_dim, init);
      const ChainResult ch =
          pcn_chain(be.from_innovations, std::move(z0), cfg.sampler.n_iter, cfg.sampler.rho, cfg.seed);
      for (std::size_t i = 0; i < ch.chain.size(); ++i) recs.push_back(to_record(ch.chain[i], be, i < keep));
      summary["acceptance_rate"] = ch.acceptance_rate;
      summary["invalid_proposals"] = ch.invalid_proposals;
      summary["estimates"] = chain_summary(recs, be);
      break;
    }
  }
  summary["paths"] = path_statistics(recs);
  if (be.diagnostics) summary["diagnostics"] = be.diagnostics(recs);

  std::ostringstream w;
  w << "id,log_psi,sup_V,endpoint_hit\n";
  for (std::size_t i = 0; i < recs.size(); ++i)
    w << i << ',' << format_double(recs[i].log_psi) << ',' << format_double(recs[i].sup_V) << ','
      << (recs[i].hit ? "true" : "false") << '\n';
  write_file(dir / "weights.csv", w.str());
  for (std::size_t i = 0; i < recs.size(); ++i)
    if (recs[i].path) write_file(dir / "paths" / id_name(i), path_csv(*recs[i].path));
  write_file(dir / "summary.json", dump_json(summary));
  if (log) *log << "wrote " << out_dir << '\n';
  return summary;
}

json calibrate_atilde(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (cfg.backend != BackendKind::Delaunay)
    throw CliError(kValidationFailed, "validation_failed", "calibrate-atilde needs a delaunay config");
  ensure_writable_dir(out_dir);
  const auto g = build_delaunay_graph(cfg.model, cfg.seed);
  double horizon = 5000.0;
  if (cfg.raw.contains("calibration"))
    horizon = cfg.raw["calibration"].value("horizon", horizon);
  const auto est = delaunay::estimate_atilde(*g, horizon, cfg.seed);
  json out = {{"a_tilde", est.a_tilde},
              {"jumps", est.jumps},
              {"horizon", est.horizon},
              {"vertices", g->vertex_count()},
              {"seed", cfg.seed}};
  write_file(fs::path(out_dir) / "calibration.json", dump_json(out));
  return out;
}

namespace {

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const CliError& e) {
    err << e.to_json().dump() << '\n';
    return e.code();
  } catch (const std::exception& e) {
    err << json{{"error", "runtime_failure"}, {"code", kRuntimeFailure}, {"message", e.what()}}.dump()
        << '\n';
    return kRuntimeFailure;
  }
}

ExperimentConfig load(const std::string& path, const RunOptions& opt) {
  ExperimentConfig cfg = parse_config(load_config_file(path), opt.seed);
  if (opt.paths) {
    cfg.sampler.n_paths = *opt.paths;
    cfg.sampler.n_iter = *opt.paths;
  }
  if (opt.threads) cfg.threads = *opt.threads;
  return cfg;
}

}  // namespace

int run_command(const std::string& config_path, const RunOptions& opt, std::ostream& out,
                std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load(config_path, opt);
    const std::string dir = resolve_output_dir(cfg, opt);
    const json s = run_experiment(cfg, dir, opt.quiet ? nullptr : &out);
    if (!opt.quiet) out << dump_json(s["paths"]);
    return static_cast<int>(kOk);
  });
}

int validate_command(const std::string& config_path, const RunOptions& opt, std::ostream& out,
                     std::ostream& err) {
  return guarded(err, [&] {
    const ValidationReport rep = validate_config(load_config_file(config_path), opt.seed);
    out << rep.to_json().dump(2) << '\n';
    return rep.exit_code();
  });
}

int calibrate_command(const std::string& config_path, const RunOptions& opt, std::ostream& out,
                      std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load(config_path, opt);
    const json r = calibrate_atilde(cfg, resolve_output_dir(cfg, opt));
    out << dump_json(r);
    return static_cast<int>(kOk);
  });
}

}  // namespace gbridge::cli
