#pragma once

// Stochastic landmark dynamics: n landmarks in R^d moving under the
// Hamiltonian H(q, p) = 1/2 sum_ij p_i' k(|q_i - q_j|) p_j with J spatially
// localized Stratonovich noise fields, and the linear auxiliary process used
// to guide them onto a target configuration.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gbridge/sde/models.hpp"

namespace gbridge::landmarks {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Gaussian kernel k(r) = amplitude exp(-r^2 / (2 length_scale^2)).
struct KernelSpec {
  double length_scale = 1.0;
  double amplitude = 1.0;

  double operator()(double r) const;
  /// k'(r) / r, finite at r = 0.
  double derivative_over_r(double r) const;
};

/// sigma_l(q) = gamma * Lambda(q - delta_l), Lambda(z) = exp(-|z|^2 / (2 tau^2)).
struct NoiseFieldSpec {
  std::vector<Vector> centers;
  Vector gamma;
  double tau = 1.0;

  int J() const noexcept { return static_cast<int>(centers.size()); }
  double Lambda(const Vector& z) const;
  /// Throws DimensionError or DomainError on inconsistent fields.
  void check(int d) const;
};

/// Positions q and momenta p as n x d matrices (row i is landmark i). The
/// flattened state is (q_1, ..., q_n, p_1, ..., p_n).
struct LandmarkState {
  Matrix q;
  Matrix p;

  int n() const noexcept { return static_cast<int>(q.rows()); }
  int d() const noexcept { return static_cast<int>(q.cols()); }
  Vector flatten() const;
  static LandmarkState unflatten(const Vector& x, int n, int d);
};

/// Throws DegeneracyError if two landmarks coincide.
void check_distinct(const Matrix& q);

double hamiltonian(const KernelSpec& kernel, const LandmarkState& s);

struct HamiltonianGradients {
  Matrix dH_dp;
  Matrix dH_dq;
};

/// Closed-form gradients; throws DegeneracyError for coincident landmarks.
HamiltonianGradients hamiltonian_gradients(const KernelSpec& kernel, const LandmarkState& s);

/// (2nd) x J matrix: column l holds the q-blocks sigma_l(q_i) and the
/// p-blocks -d/dq_i <p_i, sigma_l(q_i)> for every landmark i.
Matrix noise_matrix(const NoiseFieldSpec& noise, const LandmarkState& s);

/// Jacobian of noise column l with respect to the flattened state.
Matrix noise_jacobian(const NoiseFieldSpec& noise, const LandmarkState& s, int l);

/// 1/2 sum_l D sigma_l sigma_l, the Stratonovich-to-Ito drift correction.
Vector ito_correction(const NoiseFieldSpec& noise, const LandmarkState& s);

/// Hamiltonian drift (dH/dp, -dH/dq) plus the Ito correction.
Vector ito_drift(const KernelSpec& kernel, const NoiseFieldSpec& noise, const LandmarkState& s);

/// Hamiltonian drift alone (the Stratonovich drift).
Vector hamiltonian_drift(const KernelSpec& kernel, const LandmarkState& s);

/// Block Gram matrix [k(|q_i - q_j|) I_d].
Matrix gram_matrix(const KernelSpec& kernel, const Matrix& q);

/// Auxiliary process B~ = [[0, G], [0, C]], beta~ = 0, sigma~ frozen at
/// (qT, pT), L = [I 0], v = flattened qT. C defaults to 0.
sde::LinearAuxiliarySpec build_landmark_auxiliary(const KernelSpec& kernel,
                                                  const NoiseFieldSpec& noise, const Matrix& qT,
                                                  const Matrix& pT,
                                                  std::optional<Matrix> C = std::nullopt);

struct NoiseRankReport {
  bool passes = false;
  bool count_ok = false;
  int J = 0;
  int nd = 0;
  /// lambda_min(sigma~_q sigma~_q') at the frozen configuration.
  double lambda_min = 0.0;
  std::string message;
};

NoiseRankReport validate_noise_rank(const NoiseFieldSpec& noise, int n, int d, const Matrix& qT);

/// Guided-bridge model conditioned on q(T) = qT, with Delta = I.
sde::SdeModel landmark_model(const KernelSpec& kernel, const NoiseFieldSpec& noise,
                             const LandmarkState& initial, const Matrix& qT,
                             std::optional<Matrix> pT = std::nullopt, double T = 1.0);

/// CSV rows "landmark,q0..q{d-1},p0..p{d-1}".
void write_landmarks_csv(std::ostream& os, const LandmarkState& s);
LandmarkState read_landmarks_csv(std::istream& is);

}  // namespace gbridge::landmarks
