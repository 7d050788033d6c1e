#pragma once

// Linear auxiliary process dX~ = (B~(t) X~ + beta~(t)) dt + sigma~(t) dW and
// the backward quantities that define the Gaussian guiding function
// h~(t, x) = eta(t) exp(-H(t, x)), H = zeta' M zeta / 2, zeta = v - mu(t) - L(t) x.

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace gbridge::sde {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// dX = b(t, X) dt + sigma(t, X) dW with X in R^d and W in R^{d'}.
struct SdeSpec {
  int dim = 1;
  int noise_dim = 1;
  std::function<Vector(double, const Vector&)> b;
  std::function<Matrix(double, const Vector&)> sigma;
  Vector x0;

  /// a = sigma sigma'.
  Matrix a(double t, const Vector& x) const {
    const Matrix s = sigma(t, x);
    return s * s.transpose();
  }
};

struct LinearAuxiliarySpec {
  std::function<Matrix(double)> B_tilde;
  std::function<Vector(double)> beta_tilde;
  std::function<Matrix(double)> sigma_tilde;
  /// m x d observation matrix of full row rank.
  Matrix L;
  /// Conditioning value: L X_T = v.
  Vector v;

  int dim() const { return static_cast<int>(L.cols()); }
  int obs_dim() const { return static_cast<int>(L.rows()); }
  Matrix a_tilde(double t) const {
    const Matrix s = sigma_tilde(t);
    return s * s.transpose();
  }
  Vector b_tilde(double t, const Vector& x) const { return B_tilde(t) * x + beta_tilde(t); }
};

/// Diagonal scaling Delta(t), given by its diagonal.
struct DeltaScaling {
  std::function<Vector(double)> diagonal;

  static DeltaScaling identity(int m);
  /// (T - t)^{-power} I.
  static DeltaScaling inverse_time_to_go(int m, double T, double power = 1.0);
};

/// L(t), M(t)^{-1}, mu(t) on an increasing grid ending at T, from RK4
/// integration of dL/dt = -L B~, dmu/dt = -L beta~, dM^{-1}/dt = -L a~ L'
/// backward from L(T) = L, mu(T) = 0, M(T)^{-1} = 0. Between nodes the
/// tables are interpolated linearly.
class BackwardTables {
 public:
  BackwardTables(std::vector<double> grid, std::vector<Matrix> L, std::vector<Matrix> Minv,
                 std::vector<Vector> mu);

  const std::vector<double>& grid() const noexcept { return grid_; }
  double T() const noexcept { return grid_.back(); }
  /// Width of the last grid cell; queries in (T - eps, T) are never made by the simulator.
  double eps_table() const noexcept { return grid_.back() - grid_[grid_.size() - 2]; }

  const std::vector<Matrix>& L_nodes() const noexcept { return L_; }
  const std::vector<Matrix>& Minv_nodes() const noexcept { return Minv_; }
  const std::vector<Vector>& mu_nodes() const noexcept { return mu_; }

  Matrix L(double t) const;
  Matrix Minv(double t) const;
  Vector mu(double t) const;

 private:
  /// Index k and weight w with value = (1 - w) node[k] + w node[k + 1].
  std::pair<std::size_t, double> locate(double t) const;

  std::vector<double> grid_;
  std::vector<Matrix> L_;
  std::vector<Matrix> Minv_;
  std::vector<Vector> mu_;
};

/// Throws std::invalid_argument unless `grid` is strictly increasing with at least two nodes.
BackwardTables solve_backward_tables(const LinearAuxiliarySpec& aux, const std::vector<double>& grid);

struct HtildeQuantities {
  double log_htilde = 0.0;
  /// grad_x log h~ = L(t)' M(t) zeta.
  Vector r_tilde;
  double H = 0.0;
  Vector zeta;
  /// L(t)' M(t) L(t), the Hessian of H.
  Matrix LtML;
  /// log eta(t) = -m/2 log(2 pi) + 1/2 log|M(t)|.
  double log_eta = 0.0;
};

/// Evaluates the guiding function at (t, x) through a Cholesky factorization
/// of M(t)^{-1}. Throws ConditioningError if M(t)^{-1} is not positive
/// definite, DomainError if t >= T.
HtildeQuantities htilde_quantities(const BackwardTables& tables, const LinearAuxiliarySpec& aux,
                                   double t, const Vector& x);

}  // namespace gbridge::sde
