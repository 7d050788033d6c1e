#pragma once

// Bridges of a pure-birth process with state-dependent rate lambda(x),
// conditioned on X_T = x_T, guided by a homogeneous Poisson process of rate
// lambda~. The guided process is simulated exactly by inverting its
// integrated hazard, and its log weight has a closed form per interval.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gbridge/core/oracle.hpp"
#include "gbridge/core/path.hpp"
#include "gbridge/core/rng.hpp"
#include "gbridge/core/weights.hpp"

namespace gbridge::poisson {

class InhomPoissonSpec {
 public:
  /// `lambda[k]` is the rate at state x0 + k, k = 0..xT-x0. lambda~ defaults
  /// to min lambda. A lambda~ above min lambda is accepted with a warning.
  InhomPoissonSpec(std::int64_t x0, std::int64_t xT, double T, std::vector<double> lambda,
                   std::optional<double> lambda_tilde = std::nullopt);

  /// lambda(x) = a + b x on {x0, ..., xT}.
  static InhomPoissonSpec affine(std::int64_t x0, std::int64_t xT, double T, double a, double b,
                                 std::optional<double> lambda_tilde = std::nullopt);

  std::int64_t x0() const noexcept { return x0_; }
  std::int64_t xT() const noexcept { return xT_; }
  double T() const noexcept { return T_; }
  double lambda_tilde() const noexcept { return lambda_tilde_; }
  const std::vector<double>& lambda_table() const noexcept { return lambda_; }
  std::size_t state_count() const noexcept { return lambda_.size(); }
  bool contains(std::int64_t x) const noexcept { return x >= x0_ && x <= xT_; }
  /// Throws DomainError outside {x0, ..., xT}.
  double lambda(std::int64_t x) const;
  double min_lambda() const noexcept;
  /// lambda~ <= min lambda, the sufficient condition for equivalence of the
  /// guided and conditioned laws on [0, T].
  bool satisfies_rate_condition() const noexcept;
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  std::int64_t x0_;
  std::int64_t xT_;
  double T_;
  std::vector<double> lambda_;
  double lambda_tilde_;
  std::vector<std::string> warnings_;
};

using gbridge::OracleTable;

/// log h~(t, x) = k log(lambda~ (T - t)) - log k! - lambda~ (T - t), k = xT - x;
/// -inf outside {x0, ..., xT}.
double htilde_log(const InhomPoissonSpec& spec, double t, std::int64_t x);

/// Guided jump rate lambda(x) h~(t, x+1) / h~(t, x) = lambda(x) (xT - x) / (lambda~ (T - t)).
double guided_rate(const InhomPoissonSpec& spec, double t, std::int64_t x);

/// (A h~ / h~)(s, x) = (lambda(x) - lambda~) ((xT - x) / (lambda~ (T - s)) - 1).
double log_psi_integrand(const InhomPoissonSpec& spec, double s, std::int64_t x);

/// Exact integral of log_psi_integrand over [s1, s2] in state x.
double interval_log_psi(const InhomPoissonSpec& spec, std::int64_t x, double s1, double s2);

/// V(t, x) = (xT - x) / (lambda~ (T - t)).
double lyapunov_V(const InhomPoissonSpec& spec, double t, std::int64_t x);

/// Space-time generator of the guided process applied to V:
/// (xT - x) / (lambda~ (T - t)^2) * (1 - lambda(x) / lambda~), and 0 at xT.
double check_AcircV(const InhomPoissonSpec& spec, double t, std::int64_t x);

/// Closed-form log Psi along a path ending at xT. Throws DivergenceError otherwise.
double log_psi_poisson(const InhomPoissonSpec& spec, const PiecewiseConstantPath& path);

/// The log weight as a quadrature descriptor usable with accumulate_log_weight.
Quadrature closed_form_quadrature(const InhomPoissonSpec& spec);

/// Exact, discretization-free simulation of the guided bridge.
WeightedPath simulate_guided_bridge(const InhomPoissonSpec& spec, Rng& rng);
WeightedPath simulate_guided_bridge(const InhomPoissonSpec& spec, std::uint64_t seed);

/// Generator on {x0, ..., xT} plus an absorbing sink collecting jumps past xT.
Eigen::MatrixXd generator_matrix(const InhomPoissonSpec& spec);
/// exp(dt Q): entry (i, j) is P(X_{s+dt} = x0 + j | X_s = x0 + i); last index is the sink.
Eigen::MatrixXd transition_matrix(const InhomPoissonSpec& spec, double dt);

/// h on `grid` via h(t, x) = [exp((T - t) Q)]_{x, xT}.
OracleTable exact_h_table(const InhomPoissonSpec& spec, const std::vector<double>& grid);

/// P*(X_t = x) = p(0, x0; t, x) h(t, x) / h(0, x0) for every x in {x0, ..., xT}.
Eigen::VectorXd bridge_marginal(const InhomPoissonSpec& spec, double t);

}  // namespace gbridge::poisson
