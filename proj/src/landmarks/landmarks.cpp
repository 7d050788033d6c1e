#include "gbridge/landmarks/landmarks.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "gbridge/core/error.hpp"
#include "gbridge/core/path_io.hpp"

namespace gbridge::landmarks {

double KernelSpec::operator()(double r) const {
  return amplitude * std::exp(-r * r / (2.0 * length_scale * length_scale));
}

double KernelSpec::derivative_over_r(double r) const {
  const double l2 = length_scale * length_scale;
  return -amplitude / l2 * std::exp(-r * r / (2.0 * l2));
}

double NoiseFieldSpec::Lambda(const Vector& z) const {
  return std::exp(-z.squaredNorm() / (2.0 * tau * tau));
}

void NoiseFieldSpec::check(int d) const {
  if (centers.empty()) throw DomainError("NoiseFieldSpec: need at least one field");
  if (!(tau > 0.0)) throw DomainError("NoiseFieldSpec: tau must be positive");
  if (gamma.size() != d) throw DimensionError("NoiseFieldSpec: gamma must have length d");
  for (const auto& c : centers)
    if (c.size() != d) throw DimensionError("NoiseFieldSpec: center has wrong dimension");
}

Vector LandmarkState::flatten() const {
  const int nn = n(), dd = d();
  Vector x(2 * nn * dd);
  for (int i = 0; i < nn; ++i)
    for (int a = 0; a < dd; ++a) {
      x(i * dd + a) = q(i, a);
      x(nn * dd + i * dd + a) = p(i, a);
    }
  return x;
}

LandmarkState LandmarkState::unflatten(const Vector& x, int n, int d) {
  if (x.size() != 2 * n * d) throw DimensionError("LandmarkState: flat state has wrong length");
  LandmarkState s{Matrix(n, d), Matrix(n, d)};
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) {
      s.q(i, a) = x(i * d + a);
      s.p(i, a) = x(n * d + i * d + a);
    }
  return s;
}

void check_distinct(const Matrix& q) {
  for (Eigen::Index i = 0; i < q.rows(); ++i)
    for (Eigen::Index j = i + 1; j < q.rows(); ++j)
      if (q.row(i) == q.row(j))
        throw DegeneracyError("landmarks " + std::to_string(i) + " and " + std::to_string(j) +
                              " coincide");
}

double hamiltonian(const KernelSpec& kernel, const LandmarkState& s) {
  double h = 0.0;
  for (int i = 0; i < s.n(); ++i)
    for (int j = 0; j < s.n(); ++j)
      h += kernel((s.q.row(i) - s.q.row(j)).norm()) * s.p.row(i).dot(s.p.row(j));
  return 0.5 * h;
}

HamiltonianGradients hamiltonian_gradients(const KernelSpec& kernel, const LandmarkState& s) {
  check_distinct(s.q);
  const int n = s.n();
  HamiltonianGradients g{Matrix::Zero(n, s.d()), Matrix::Zero(n, s.d())};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Eigen::RowVectorXd dq = s.q.row(i) - s.q.row(j);
      const double r = dq.norm();
      g.dH_dp.row(i) += kernel(r) * s.p.row(j);
      if (i != j) g.dH_dq.row(i) += kernel.derivative_over_r(r) * s.p.row(i).dot(s.p.row(j)) * dq;
    }
  }
  return g;
}

Matrix noise_matrix(const NoiseFieldSpec& noise, const LandmarkState& s) {
  const int n = s.n(), d = s.d();
  noise.check(d);
  const double tau2 = noise.tau * noise.tau;
  Matrix S = Matrix::Zero(2 * n * d, noise.J());
  for (int l = 0; l < noise.J(); ++l) {
    for (int i = 0; i < n; ++i) {
      const Vector z = s.q.row(i).transpose() - noise.centers[l];
      const double lam = noise.Lambda(z);
      const double pg = s.p.row(i).dot(noise.gamma);
      S.block(i * d, l, d, 1) = noise.gamma * lam;
      S.block(n * d + i * d, l, d, 1) = pg * lam / tau2 * z;
    }
  }
  return S;
}

Matrix noise_jacobian(const NoiseFieldSpec& noise, const LandmarkState& s, int l) {
  const int n = s.n(), d = s.d();
  noise.check(d);
  if (l < 0 || l >= noise.J()) throw DomainError("noise_jacobian: field index out of range");
  const double tau2 = noise.tau * noise.tau;
  const Matrix I = Matrix::Identity(d, d);
  Matrix D = Matrix::Zero(2 * n * d, 2 * n * d);
  for (int i = 0; i < n; ++i) {
    const Vector z = s.q.row(i).transpose() - noise.centers[l];
    const double lam = noise.Lambda(z);
    const double pg = s.p.row(i).dot(noise.gamma);
    const int qi = i * d, pi = n * d + i * d;
    // q-block gamma Lambda(z): gradient of Lambda is -Lambda z / tau^2.
    D.block(qi, qi, d, d) = -lam / tau2 * noise.gamma * z.transpose();
    // p-block (p . gamma) Lambda z / tau^2.
    D.block(pi, qi, d, d) = pg * lam / tau2 * (I - z * z.transpose() / tau2);
    D.block(pi, pi, d, d) = lam / tau2 * z * noise.gamma.transpose();
  }
  return D;
}

Vector ito_correction(const NoiseFieldSpec& noise, const LandmarkState& s) {
  const Matrix S = noise_matrix(noise, s);
  Vector c = Vector::Zero(S.rows());
  for (int l = 0; l < noise.J(); ++l) c += noise_jacobian(noise, s, l) * S.col(l);
  return 0.5 * c;
}

Vector hamiltonian_drift(const KernelSpec& kernel, const LandmarkState& s) {
  const HamiltonianGradients g = hamiltonian_gradients(kernel, s);
  LandmarkState ds{g.dH_dp, -g.dH_dq};
  return ds.flatten();
}

Vector ito_drift(const KernelSpec& kernel, const NoiseFieldSpec& noise, const LandmarkState& s) {
  return hamiltonian_drift(kernel, s) + ito_correction(noise, s);
}

Matrix gram_matrix(const KernelSpec& kernel, const Matrix& q) {
  const auto n = q.rows();
  const auto d = q.cols();
  Matrix G = Matrix::Zero(n * d, n * d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      G.block(i * d, j * d, d, d) =
          kernel((q.row(i) - q.row(j)).norm()) * Matrix::Identity(d, d);
  return G;
}

sde::LinearAuxiliarySpec build_landmark_auxiliary(const KernelSpec& kernel,
                                                  const NoiseFieldSpec& noise, const Matrix& qT,
                                                  const Matrix& pT, std::optional<Matrix> C) {
  if (qT.rows() != pT.rows() || qT.cols() != pT.cols())
    throw DimensionError("build_landmark_auxiliary: qT and pT differ in shape");
  check_distinct(qT);
  const auto n = qT.rows(), d = qT.cols();
  const auto nd = n * d;
  const Matrix G = gram_matrix(kernel, qT);
  Matrix Cm = C ? *C : Matrix::Zero(nd, nd);
  if (Cm.rows() != nd || Cm.cols() != nd) throw DimensionError("build_landmark_auxiliary: C must be nd x nd");
  Matrix B = Matrix::Zero(2 * nd, 2 * nd);
  B.block(0, nd, nd, nd) = G;
  B.block(nd, nd, nd, nd) = Cm;
  const Matrix sig = noise_matrix(noise, LandmarkState{qT, pT});

  sde::LinearAuxiliarySpec aux;
  aux.B_tilde = [B](double) { return B; };
  aux.beta_tilde = [nd](double) { return Vector::Zero(2 * nd); };
  aux.sigma_tilde = [sig](double) { return sig; };
  aux.L = Matrix::Zero(nd, 2 * nd);
  aux.L.leftCols(nd) = Matrix::Identity(nd, nd);
  aux.v = LandmarkState{qT, pT}.flatten().head(nd);
  return aux;
}

NoiseRankReport validate_noise_rank(const NoiseFieldSpec& noise, int n, int d, const Matrix& qT) {
  NoiseRankReport r;
  r.J = noise.J();
  r.nd = n * d;
  r.count_ok = r.J >= r.nd;
  if (qT.rows() != n || qT.cols() != d)
    throw DimensionError("validate_noise_rank: qT must be n x d");
  const Matrix sig = noise_matrix(noise, LandmarkState{qT, Matrix::Zero(n, d)});
  const Matrix sq = sig.topRows(r.nd);
  const Eigen::SelfAdjointEigenSolver<Matrix> es(sq * sq.transpose(), Eigen::EigenvaluesOnly);
  r.lambda_min = es.eigenvalues().minCoeff();
  r.passes = r.count_ok && r.lambda_min > 1e-10;
  if (!r.count_ok) {
    r.message = "J = " + std::to_string(r.J) + " noise fields but n*d = " +
                std::to_string(r.nd) +
                ": guiding needs J >= nd and behaves erratically otherwise";
  } else if (!r.passes) {
    std::ostringstream os;
    os << "sigma_q sigma_q' is not strictly positive definite at the target (lambda_min = "
       << r.lambda_min << "); guiding behaves erratically";
    r.message = os.str();
  }
  return r;
}

sde::SdeModel landmark_model(const KernelSpec& kernel, const NoiseFieldSpec& noise,
                             const LandmarkState& initial, const Matrix& qT,
                             std::optional<Matrix> pT, double T) {
  const int n = initial.n(), d = initial.d();
  check_distinct(initial.q);
  noise.check(d);
  const Matrix pTm = pT ? *pT : Matrix::Zero(n, d);
  sde::SdeModel m;
  m.name = "landmarks";
  m.T = T;
  m.spec.dim = 2 * n * d;
  m.spec.noise_dim = noise.J();
  m.spec.x0 = initial.flatten();
  m.spec.b = [kernel, noise, n, d](double, const Vector& x) {
    return ito_drift(kernel, noise, LandmarkState::unflatten(x, n, d));
  };
  m.spec.sigma = [noise, n, d](double, const Vector& x) {
    return noise_matrix(noise, LandmarkState::unflatten(x, n, d));
  };
  m.aux = build_landmark_auxiliary(kernel, noise, qT, pTm);
  m.delta = sde::DeltaScaling::identity(n * d);
  return m;
}

void write_landmarks_csv(std::ostream& os, const LandmarkState& s) {
  os << "landmark";
  for (int a = 0; a < s.d(); ++a) os << ",q" << a;
  for (int a = 0; a < s.d(); ++a) os << ",p" << a;
  os << '\n';
  for (int i = 0; i < s.n(); ++i) {
    os << i;
    for (int a = 0; a < s.d(); ++a) os << ',' << format_double(s.q(i, a));
    for (int a = 0; a < s.d(); ++a) os << ',' << format_double(s.p(i, a));
    os << '\n';
  }
}

LandmarkState read_landmarks_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DomainError("read_landmarks_csv: empty input");
  const auto cols = std::count(line.begin(), line.end(), ',');
  if (cols < 2 || cols % 2 != 0) throw DomainError("read_landmarks_csv: malformed header");
  const int d = static_cast<int>(cols / 2);
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::vector<double> r(static_cast<std::size_t>(1 + 2 * d));
    for (auto& v : r)
      if (!(ss >> v)) throw DomainError("read_landmarks_csv: malformed row");
    rows.push_back(std::move(r));
  }
  const int n = static_cast<int>(rows.size());
  LandmarkState s{Matrix(n, d), Matrix(n, d)};
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) {
      s.q(i, a) = rows[i][1 + a];
      s.p(i, a) = rows[i][1 + d + a];
    }
  return s;
}

}  // namespace gbridge::landmarks
