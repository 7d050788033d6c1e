#include "gbridge/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "gbridge/core/error.hpp"

namespace gbridge::cli {

using nlohmann::json;

nlohmann::json CliError::to_json() const {
  return {{"error", kind_}, {"code", code_}, {"message", what()}};
}

std::string to_string(BackendKind b) {
  switch (b) {
    case BackendKind::Poisson: return "poisson";
    case BackendKind::Delaunay: return "delaunay";
    case BackendKind::Sde: return "sde";
    case BackendKind::Landmarks: return "landmarks";
  }
  return "?";
}

std::string to_string(SamplerKind s) {
  switch (s) {
    case SamplerKind::Importance: return "importance";
    case SamplerKind::MhIndependence: return "mh_independence";
    case SamplerKind::Pcn: return "pcn";
  }
  return "?";
}

nlohmann::json ValidationReport::to_json() const {
  json errs = json::array();
  for (const auto& e : errors) errs.push_back({{"code", e.code}, {"message", e.message}});
  return {{"errors", errs}, {"warnings", warnings}};
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(kMalformedConfig, "malformed_config", "cannot read config file " + path);
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw CliError(kMalformedConfig, "malformed_config", std::string("invalid JSON: ") + e.what());
  }
}

namespace {

[[noreturn]] void missing(const std::string& key) {
  throw CliError(kValidationFailed, "validation_failed", "missing required key '" + key + "'");
}

template <class T>
T get(const json& j, const std::string& key) {
  if (!j.contains(key)) missing(key);
  return j.at(key).get<T>();
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

Eigen::VectorXd to_vector(const json& j) {
  if (j.is_number()) return Eigen::VectorXd::Constant(1, j.get<double>());
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd to_matrix(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size())
      throw CliError(kMalformedConfig, "malformed_config", "ragged matrix in config");
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

BackendKind parse_backend(const json& j) {
  if (!j.contains("backend")) missing("backend");
  if (!j["backend"].is_string())
    throw CliError(kMalformedConfig, "malformed_config", "'backend' must be a string");
  const auto b = j["backend"].get<std::string>();
  if (b == "poisson") return BackendKind::Poisson;
  if (b == "delaunay") return BackendKind::Delaunay;
  if (b == "sde") return BackendKind::Sde;
  if (b == "landmarks") return BackendKind::Landmarks;
  throw CliError(kUnknownBackend, "unknown_backend",
                 "unknown backend '" + b + "' (expected poisson, delaunay, sde or landmarks)");
}

SamplerConfig parse_sampler(const json& j, BackendKind backend) {
  SamplerConfig s;
  if (!j.contains("sampler")) return s;
  const json& sj = j["sampler"];
  if (!sj.is_object()) throw CliError(kMalformedConfig, "malformed_config", "'sampler' must be an object");
  const auto kind = get_or<std::string>(sj, "kind", "importance");
  if (kind == "importance") s.kind = SamplerKind::Importance;
  else if (kind == "mh_independence") s.kind = SamplerKind::MhIndependence;
  else if (kind == "pcn") s.kind = SamplerKind::Pcn;
  else throw CliError(kValidationFailed, "validation_failed", "unknown sampler '" + kind + "'");
  if (s.kind == SamplerKind::Pcn && backend != BackendKind::Sde && backend != BackendKind::Landmarks)
    throw CliError(kValidationFailed, "validation_failed",
                   "pcn needs Gaussian driving noise (sde or landmarks backend)");
  s.n_paths = get_or<std::size_t>(sj, "n_paths", s.n_paths);
  s.n_iter = get_or<std::size_t>(sj, "n_iter", s.n_iter);
  s.rho = get_or<double>(sj, "rho", s.rho);
  if (s.n_paths == 0 || s.n_iter == 0)
    throw CliError(kValidationFailed, "validation_failed", "n_paths and n_iter must be positive");
  if (!(s.rho >= 0.0 && s.rho < 1.0))
    throw CliError(kValidationFailed, "validation_failed", "rho must lie in [0, 1)");
  return s;
}

std::uint64_t parse_seed(const json& j, std::optional<std::uint64_t> override_seed) {
  if (override_seed) return *override_seed;
  if (!j.contains("seed"))
    throw CliError(kValidationFailed, "validation_failed",
                   "missing required key 'seed' (seeds are mandatory; no clock seeding)");
  const json& s = j["seed"];
  if (s.is_number_unsigned()) return s.get<std::uint64_t>();
  if (s.is_number_integer()) {
    if (s.get<std::int64_t>() < 0)
      throw CliError(kValidationFailed, "validation_failed", "seed must be non-negative");
    return static_cast<std::uint64_t>(s.get<std::int64_t>());
  }
  throw CliError(kMalformedConfig, "malformed_config", "seed must be an integer");
}

// Runs fn and converts any failure into a validation issue.
template <class Fn>
void collect(ValidationReport& r, Fn&& fn) {
  try {
    fn();
  } catch (const CliError& e) {
    r.errors.push_back({e.code(), e.what()});
  } catch (const json::type_error& e) {
    r.errors.push_back({kMalformedConfig, std::string("wrong value type: ") + e.what()});
  } catch (const json::exception& e) {
    r.errors.push_back({kValidationFailed, e.what()});
  } catch (const std::exception& e) {
    r.errors.push_back({kValidationFailed, e.what()});
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Model builders

poisson::InhomPoissonSpec build_poisson(const json& m) {
  const auto x0 = get<std::int64_t>(m, "x0");
  const auto xT = get<std::int64_t>(m, "xT");
  const auto T = get<double>(m, "T");
  std::optional<double> lt;
  if (m.contains("lambda_tilde") && !m["lambda_tilde"].is_null()) lt = m["lambda_tilde"].get<double>();
  if (!m.contains("lambda")) missing("lambda");
  const json& l = m["lambda"];
  if (l.is_array()) return poisson::InhomPoissonSpec(x0, xT, T, l.get<std::vector<double>>(), lt);
  if (l.is_object())
    return poisson::InhomPoissonSpec::affine(x0, xT, T, get<double>(l, "a"), get_or<double>(l, "b", 0.0), lt);
  if (l.is_number()) return poisson::InhomPoissonSpec::affine(x0, xT, T, l.get<double>(), 0.0, lt);
  throw CliError(kMalformedConfig, "malformed_config",
                 "'lambda' must be a table, {a, b} or a number");
}

std::shared_ptr<const delaunay::DelaunayGraph> build_delaunay_graph(const json& m,
                                                                    std::uint64_t seed) {
  using namespace delaunay;
  std::optional<Window> window;
  if (m.contains("window")) {
    const auto w = m["window"].get<std::vector<double>>();
    if (w.size() != 4)
      throw CliError(kMalformedConfig, "malformed_config", "'window' is [xmin, xmax, ymin, ymax]");
    window = Window{w[0], w[1], w[2], w[3]};
    if (!(window->area() > 0.0)) throw CliError(kValidationFailed, "validation_failed", "window has no area");
  }
  if (m.contains("graph_json")) {
    std::ifstream in(m["graph_json"].get<std::string>());
    if (!in) throw CliError(kValidationFailed, "validation_failed", "cannot read graph_json");
    return std::make_shared<const DelaunayGraph>(graph_from_json(json::parse(in)));
  }
  if (m.contains("points_csv")) {
    std::ifstream in(m["points_csv"].get<std::string>());
    if (!in) throw CliError(kValidationFailed, "validation_failed", "cannot read points_csv");
    return std::make_shared<const DelaunayGraph>(build_delaunay(read_points_csv(in), window));
  }
  if (m.contains("points")) {
    std::vector<Point> pts;
    for (const auto& p : m["points"]) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return std::make_shared<const DelaunayGraph>(build_delaunay(std::move(pts), window));
  }
  const double intensity = get<double>(m, "intensity");
  if (!(intensity > 0.0)) throw CliError(kValidationFailed, "validation_failed", "intensity must be positive");
  const Window w = window.value_or(Window{});
  const auto point_seed = get_or<std::uint64_t>(m, "point_seed", seed);
  return std::make_shared<const DelaunayGraph>(
      build_delaunay(sample_poisson_points(intensity, w, point_seed), w));
}

namespace {

int vertex_from(const json& m, const std::string& key, const delaunay::DelaunayGraph& g,
                double fx, double fy) {
  const auto& w = g.window();
  if (!m.contains(key))
    return g.nearest_vertex({w.xmin + fx * w.width(), w.ymin + fy * w.height()});
  const json& v = m[key];
  if (v.is_number_integer()) {
    const auto i = v.get<long long>();
    if (i < 0 || i >= static_cast<long long>(g.vertex_count()))
      throw CliError(kValidationFailed, "validation_failed", "'" + key + "' vertex index out of range");
    return static_cast<int>(i);
  }
  const auto c = v.get<std::vector<double>>();
  if (c.size() != 2) throw CliError(kMalformedConfig, "malformed_config", "'" + key + "' must be [x, y]");
  return g.nearest_vertex({c[0], c[1]});
}

}  // namespace

delaunay::DelaunayBridgeSpec build_delaunay(const json& m, std::uint64_t seed) {
  auto g = build_delaunay_graph(m, seed);
  const int x0 = vertex_from(m, "x0", *g, 0.3, 0.3);
  const int xT = vertex_from(m, "xT", *g, 0.7, 0.7);
  return delaunay::DelaunayBridgeSpec(g, x0, xT, get<double>(m, "T"), get<double>(m, "a_tilde"));
}

sde::SdeModel build_sde(const json& m) {
  const auto name = get<std::string>(m, "name");
  if (name == "brownian") {
    const Eigen::VectorXd x0 = to_vector(m.contains("x0") ? m["x0"] : json(0.0));
    const Eigen::VectorXd v = to_vector(m.contains("v") ? m["v"] : json(0.0));
    return sde::brownian_model(x0, v, get_or<double>(m, "T", 1.0), get_or<double>(m, "sigma", 1.0));
  }
  if (name == "ou") {
    return sde::ou_model(get<double>(m, "x0"), get<double>(m, "v"), get_or<double>(m, "T", 1.0),
                         get<double>(m, "theta"), get_or<double>(m, "mean", 0.0),
                         get_or<double>(m, "sigma", 1.0), get_or<double>(m, "aux_theta", 0.0));
  }
  if (name == "integrated_diffusion") {
    sde::IntegratedDiffusionParams p;
    p.x0 = get_or<double>(m, "x0", p.x0);
    p.v0 = get_or<double>(m, "v0", p.v0);
    p.target = get<double>(m, "target");
    p.T = get_or<double>(m, "T", p.T);
    p.damping = get_or<double>(m, "damping", p.damping);
    p.gamma0 = get_or<double>(m, "gamma0", p.gamma0);
    p.gamma1 = get_or<double>(m, "gamma1", p.gamma1);
    return sde::integrated_diffusion_model(p);
  }
  throw CliError(kValidationFailed, "validation_failed",
                 "unknown sde model '" + name + "' (expected brownian, ou or integrated_diffusion)");
}

LandmarkSetup parse_landmarks(const json& m) {
  LandmarkSetup s;
  const Eigen::MatrixXd q0 = to_matrix(get<json>(m, "q0"));
  const auto n = q0.rows(), d = q0.cols();
  if (n == 0 || d == 0) throw CliError(kValidationFailed, "validation_failed", "q0 is empty");
  s.initial.q = q0;
  s.initial.p = m.contains("p0") ? to_matrix(m["p0"]) : Eigen::MatrixXd::Zero(n, d);
  s.qT = to_matrix(get<json>(m, "qT"));
  s.pT = m.contains("pT") ? to_matrix(m["pT"]) : Eigen::MatrixXd::Zero(n, d);
  if (s.initial.p.rows() != n || s.initial.p.cols() != d || s.qT.rows() != n || s.qT.cols() != d ||
      s.pT.rows() != n || s.pT.cols() != d)
    throw CliError(kValidationFailed, "validation_failed", "q0, p0, qT and pT must all be n x d");
  s.T = get_or<double>(m, "T", 1.0);
  if (m.contains("kernel")) {
    s.kernel.length_scale = get_or<double>(m["kernel"], "length_scale", 1.0);
    s.kernel.amplitude = get_or<double>(m["kernel"], "amplitude", 1.0);
  }
  const json& nz = get<json>(m, "noise");
  for (const auto& c : get<json>(nz, "centers")) s.noise.centers.push_back(to_vector(c));
  s.noise.gamma = nz.contains("gamma") ? to_vector(nz["gamma"]) : Eigen::VectorXd::Ones(d);
  s.noise.tau = get_or<double>(nz, "tau", 1.0);
  s.noise.check(static_cast<int>(d));
  return s;
}

sde::SdeModel build_landmarks(const LandmarkSetup& s) {
  return landmarks::landmark_model(s.kernel, s.noise, s.initial, s.qT, s.pT, s.T);
}

// ---------------------------------------------------------------------------
// Validation

ValidationReport validate_config(const json& j, std::optional<std::uint64_t> seed_override) {
  ValidationReport r;
  if (!j.is_object()) {
    r.errors.push_back({kMalformedConfig, "config must be a JSON object"});
    return r;
  }
  BackendKind backend = BackendKind::Poisson;
  bool backend_ok = false;
  collect(r, [&] {
    backend = parse_backend(j);
    backend_ok = true;
  });
  std::uint64_t seed = 0;
  collect(r, [&] { seed = parse_seed(j, seed_override); });
  if (!backend_ok) return r;
  collect(r, [&] { parse_sampler(j, backend); });
  collect(r, [&] {
    if (j.contains("output") && !j["output"].is_string())
      throw CliError(kMalformedConfig, "malformed_config", "'output' must be a string");
  });
  if (!j.contains("model")) {
    r.errors.push_back({kValidationFailed, "missing required key 'model'"});
    return r;
  }
  if (!j["model"].is_object()) {
    r.errors.push_back({kMalformedConfig, "'model' must be an object"});
    return r;
  }
  const json& m = j["model"];

  std::size_t steps = 1000;
  collect(r, [&] {
    if (j.contains("grid")) steps = get_or<std::size_t>(j["grid"], "steps", steps);
    if (steps == 0) throw CliError(kValidationFailed, "validation_failed", "grid.steps must be positive");
  });

  switch (backend) {
    case BackendKind::Poisson:
      collect(r, [&] {
        const auto spec = build_poisson(m);
        for (const auto& w : spec.warnings()) r.warnings.push_back(w);
      });
      break;
    case BackendKind::Delaunay:
      collect(r, [&] {
        const auto spec = build_delaunay(m, seed);
        const auto bad = delaunay::greedy_neighbor_violations(spec.graph(), spec.xT());
        if (!bad.empty())
          r.warnings.push_back(std::to_string(bad.size()) +
                               " vertices have no neighbor closer to the target");
      });
      break;
    case BackendKind::Sde:
      collect(r, [&] { build_sde(m); });
      break;
    case BackendKind::Landmarks:
      collect(r, [&] {
        const LandmarkSetup s = parse_landmarks(m);
        const auto rep = landmarks::validate_noise_rank(s.noise, s.initial.n(), s.initial.d(), s.qT);
        if (!rep.passes) throw CliError(kValidationFailed, "validation_failed", rep.message);
        build_landmarks(s);
      });
      break;
  }
  if ((backend == BackendKind::Sde || backend == BackendKind::Landmarks) && steps > 0) {
    const double last = 1.0 / (static_cast<double>(steps) * static_cast<double>(steps));
    if (last > 1e-4)
      r.warnings.push_back("grid.steps = " + std::to_string(steps) +
                           " leaves a last step above 1e-4 T; use at least 100 steps");
  }
  return r;
}

ExperimentConfig parse_config(const json& j, std::optional<std::uint64_t> seed_override) {
  const ValidationReport rep = validate_config(j, seed_override);
  if (!rep.ok()) {
    const auto& e = rep.errors.front();
    const char* kind = e.code == kUnknownBackend   ? "unknown_backend"
                       : e.code == kMalformedConfig ? "malformed_config"
                                                    : "validation_failed";
    throw CliError(e.code, kind, e.message);
  }
  ExperimentConfig c;
  c.raw = j;
  c.backend = parse_backend(j);
  c.seed = parse_seed(j, seed_override);
  c.sampler = parse_sampler(j, c.backend);
  c.model = j["model"];
  c.output = get_or<std::string>(j, "output", "");
  if (j.contains("grid")) c.grid_steps = get_or<std::size_t>(j["grid"], "steps", c.grid_steps);
  if (j.contains("estimate_time")) c.estimate_time = j["estimate_time"].get<double>();
  c.paths_to_write = get_or<std::size_t>(j, "write_paths", c.paths_to_write);
  c.threads = get_or<unsigned>(j, "threads", c.threads);
  c.oracle_max_vertices = get_or<std::size_t>(j, "oracle_max_vertices", c.oracle_max_vertices);
  return c;
}

}  // namespace gbridge::cli
