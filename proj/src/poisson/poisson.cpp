#include "gbridge/poisson/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "gbridge/core/diagnostics.hpp"
#include "gbridge/core/error.hpp"

namespace gbridge::poisson {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

InhomPoissonSpec::InhomPoissonSpec(std::int64_t x0, std::int64_t xT, double T,
                                   std::vector<double> lambda, std::optional<double> lambda_tilde)
    : x0_(x0), xT_(xT), T_(T), lambda_(std::move(lambda)) {
  if (!(xT_ > x0_)) throw std::invalid_argument("poisson spec: need xT > x0");
  if (!(T_ > 0.0) || !std::isfinite(T_)) throw std::invalid_argument("poisson spec: need T > 0");
  if (lambda_.size() != static_cast<std::size_t>(xT_ - x0_ + 1))
    throw DimensionError("poisson spec: lambda table must cover {x0, ..., xT}");
  for (double l : lambda_)
    if (!(l > 0.0) || !std::isfinite(l))
      throw std::invalid_argument("poisson spec: lambda must be finite and positive");
  lambda_tilde_ = lambda_tilde.value_or(min_lambda());
  if (!(lambda_tilde_ > 0.0) || !std::isfinite(lambda_tilde_))
    throw std::invalid_argument("poisson spec: lambda_tilde must be finite and positive");
  if (!satisfies_rate_condition()) {
    std::ostringstream os;
    os << "lambda_tilde = " << lambda_tilde_ << " exceeds min lambda = " << min_lambda()
       << "; the equivalence condition lambda_tilde <= min lambda(x) does not hold";
    warnings_.push_back(os.str());
  }
}

InhomPoissonSpec InhomPoissonSpec::affine(std::int64_t x0, std::int64_t xT, double T, double a,
                                          double b, std::optional<double> lambda_tilde) {
  std::vector<double> table;
  for (std::int64_t x = x0; x <= xT; ++x) table.push_back(a + b * static_cast<double>(x));
  return InhomPoissonSpec(x0, xT, T, std::move(table), lambda_tilde);
}

double InhomPoissonSpec::lambda(std::int64_t x) const {
  if (!contains(x)) throw DomainError("state " + std::to_string(x) + " outside {x0, ..., xT}");
  return lambda_[static_cast<std::size_t>(x - x0_)];
}

double InhomPoissonSpec::min_lambda() const noexcept {
  return *std::min_element(lambda_.begin(), lambda_.end());
}

bool InhomPoissonSpec::satisfies_rate_condition() const noexcept {
  return lambda_tilde_ <= min_lambda();
}

double htilde_log(const InhomPoissonSpec& spec, double t, std::int64_t x) {
  if (!spec.contains(x)) return kNegInf;
  const double k = static_cast<double>(spec.xT() - x);
  const double mass = spec.lambda_tilde() * (spec.T() - t);
  const double log_pow = k == 0.0 ? 0.0 : k * std::log(mass);
  return log_pow - std::lgamma(k + 1.0) - mass;
}

double guided_rate(const InhomPoissonSpec& spec, double t, std::int64_t x) {
  const double lam = spec.lambda(x);
  if (x == spec.xT()) return 0.0;
  const double k = static_cast<double>(spec.xT() - x);
  return lam * k / (spec.lambda_tilde() * (spec.T() - t));
}

double log_psi_integrand(const InhomPoissonSpec& spec, double s, std::int64_t x) {
  const double diff = spec.lambda(x) - spec.lambda_tilde();
  if (x == spec.xT()) return -diff;
  const double k = static_cast<double>(spec.xT() - x);
  return diff * (k / (spec.lambda_tilde() * (spec.T() - s)) - 1.0);
}

double interval_log_psi(const InhomPoissonSpec& spec, std::int64_t x, double s1, double s2) {
  const double diff = spec.lambda(x) - spec.lambda_tilde();
  if (x == spec.xT()) return -diff * (s2 - s1);
  const double k = static_cast<double>(spec.xT() - x);
  const double T = spec.T();
  // log((T - s1) / (T - s2)) is +inf when s2 = T: the weight diverges.
  return diff * ((k / spec.lambda_tilde()) * std::log((T - s1) / (T - s2)) - (s2 - s1));
}

double lyapunov_V(const InhomPoissonSpec& spec, double t, std::int64_t x) {
  return static_cast<double>(spec.xT() - x) / (spec.lambda_tilde() * (spec.T() - t));
}

double check_AcircV(const InhomPoissonSpec& spec, double t, std::int64_t x) {
  const double lam = spec.lambda(x);
  if (x == spec.xT()) return 0.0;
  const double k = static_cast<double>(spec.xT() - x);
  const double lt = spec.lambda_tilde();
  const double tau = spec.T() - t;
  return k / (lt * tau * tau) * (1.0 - lam / lt);
}

double log_psi_poisson(const InhomPoissonSpec& spec, const PiecewiseConstantPath& path) {
  if (path.terminal_state() != spec.xT())
    throw DivergenceError("log Psi diverges: path ends at " +
                          std::to_string(path.terminal_state()) + " instead of xT = " +
                          std::to_string(spec.xT()));
  double total = 0.0;
  for (std::size_t k = 0; k < path.interval_count(); ++k)
    total += interval_log_psi(spec, path.states()[k], path.interval_start(k), path.interval_end(k));
  return total;
}

Quadrature closed_form_quadrature(const InhomPoissonSpec& spec) {
  return Quadrature::closed(
      [&spec](std::int64_t x, double s1, double s2) { return interval_log_psi(spec, x, s1, s2); });
}

WeightedPath simulate_guided_bridge(const InhomPoissonSpec& spec, Rng& rng) {
  const double T = spec.T();
  const double lt = spec.lambda_tilde();
  PiecewiseConstantPath path(T, spec.x0());
  double t = 0.0;
  for (std::int64_t x = spec.x0(); x < spec.xT(); ++x) {
    // Integrated hazard from t to s is (lambda(x) k / lambda~) log((T - t) / (T - s)).
    const double k = static_cast<double>(spec.xT() - x);
    const double e = rng.exponential();
    const double remaining = (T - t) * std::exp(-e * lt / (spec.lambda(x) * k));
    double s = T - remaining;
    // Guard the strict ordering against rounding when remaining is tiny.
    if (!(s > t)) s = std::nextafter(t, T);
    if (!(s < T)) s = std::nextafter(T, 0.0);
    path.push_jump(s, x + 1);
    t = s;
  }
  WeightedPath wp(path);
  wp.log_psi = log_psi_poisson(spec, path);
  wp.sup_V = sup_V_diagnostic(path, [&spec](double s, std::int64_t x) {
    return lyapunov_V(spec, s, x);
  });
  wp.endpoint_hit = path.terminal_state() == spec.xT();
  return wp;
}

WeightedPath simulate_guided_bridge(const InhomPoissonSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  WeightedPath wp = simulate_guided_bridge(spec, rng);
  wp.seed = seed;
  return wp;
}

Eigen::MatrixXd generator_matrix(const InhomPoissonSpec& spec) {
  const auto n = static_cast<Eigen::Index>(spec.state_count());
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lam = spec.lambda_table()[static_cast<std::size_t>(i)];
    Q(i, i) = -lam;
    Q(i, i + 1) = lam;
  }
  return Q;
}

Eigen::MatrixXd transition_matrix(const InhomPoissonSpec& spec, double dt) {
  if (dt < 0.0) throw std::invalid_argument("transition_matrix: negative time step");
  const Eigen::MatrixXd Q = generator_matrix(spec);
  return (dt * Q).exp();
}

OracleTable exact_h_table(const InhomPoissonSpec& spec, const std::vector<double>& grid) {
  const auto n = static_cast<Eigen::Index>(spec.state_count());
  const Eigen::Index target = n - 1;
  OracleTable table;
  table.grid = grid;
  table.offset = spec.x0();
  table.h_values.resize(static_cast<Eigen::Index>(grid.size()), n);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    if (t < 0.0 || t > spec.T()) throw std::invalid_argument("exact_h_table: grid outside [0, T]");
    const Eigen::MatrixXd P = transition_matrix(spec, spec.T() - t);
    for (Eigen::Index x = 0; x < n; ++x) {
      const double h = P(x, target);
      if (!(h >= -1e-12 && h <= 1.0 + 1e-12))
        throw std::logic_error("exact_h_table: h outside [0, 1]");
      table.h_values(static_cast<Eigen::Index>(i), x) = h;
    }
  }
  return table;
}

Eigen::VectorXd bridge_marginal(const InhomPoissonSpec& spec, double t) {
  const auto n = static_cast<Eigen::Index>(spec.state_count());
  const Eigen::MatrixXd forward = transition_matrix(spec, t);
  const Eigen::MatrixXd backward = transition_matrix(spec, spec.T() - t);
  const double h0 = transition_matrix(spec, spec.T())(0, n - 1);
  Eigen::VectorXd p(n);
  for (Eigen::Index x = 0; x < n; ++x) p[x] = forward(0, x) * backward(x, n - 1) / h0;
  return p;
}

}  // namespace gbridge::poisson
