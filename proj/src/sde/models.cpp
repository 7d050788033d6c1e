#include "gbridge/sde/models.hpp"

#include <cmath>

#include "gbridge/core/error.hpp"

namespace gbridge::sde {

SdeModel brownian_model(const Vector& x0, const Vector& v, double T, double sigma) {
  if (x0.size() != v.size()) throw DimensionError("brownian_model: x0 and v differ in length");
  if (!(T > 0.0)) throw DomainError("brownian_model: T must be positive");
  const int d = static_cast<int>(x0.size());
  SdeModel m;
  m.name = "brownian";
  m.T = T;
  m.spec.dim = d;
  m.spec.noise_dim = d;
  m.spec.x0 = x0;
  m.spec.b = [d](double, const Vector&) { return Vector::Zero(d); };
  m.spec.sigma = [d, sigma](double, const Vector&) { return Matrix(sigma * Matrix::Identity(d, d)); };
  m.aux.B_tilde = [d](double) { return Matrix::Zero(d, d); };
  m.aux.beta_tilde = [d](double) { return Vector::Zero(d); };
  m.aux.sigma_tilde = [d, sigma](double) { return Matrix(sigma * Matrix::Identity(d, d)); };
  m.aux.L = Matrix::Identity(d, d);
  m.aux.v = v;
  m.delta = DeltaScaling::identity(d);
  return m;
}

SdeModel ou_model(double x0, double v, double T, double theta, double mean, double sigma,
                  double aux_theta) {
  if (!(T > 0.0)) throw DomainError("ou_model: T must be positive");
  SdeModel m;
  m.name = "ou";
  m.T = T;
  m.spec.dim = 1;
  m.spec.noise_dim = 1;
  m.spec.x0 = Vector::Constant(1, x0);
  m.spec.b = [theta, mean](double, const Vector& x) {
    return Vector::Constant(1, theta * (mean - x(0)));
  };
  m.spec.sigma = [sigma](double, const Vector&) { return Matrix::Constant(1, 1, sigma); };
  m.aux.B_tilde = [aux_theta](double) { return Matrix::Constant(1, 1, -aux_theta); };
  m.aux.beta_tilde = [aux_theta, mean](double) { return Vector::Constant(1, aux_theta * mean); };
  m.aux.sigma_tilde = [sigma](double) { return Matrix::Constant(1, 1, sigma); };
  m.aux.L = Matrix::Identity(1, 1);
  m.aux.v = Vector::Constant(1, v);
  m.delta = DeltaScaling::identity(1);
  return m;
}

double integrated_gamma(const IntegratedDiffusionParams& p, double x1) {
  return p.gamma0 + p.gamma1 * std::sin(x1);
}

SdeModel integrated_diffusion_model(const IntegratedDiffusionParams& p) {
  if (!(p.T > 0.0)) throw DomainError("integrated_diffusion_model: T must be positive");
  if (!(p.gamma0 > std::abs(p.gamma1)))
    throw DomainError("integrated_diffusion_model: need gamma0 > |gamma1| so gamma stays positive");
  SdeModel m;
  m.name = "integrated_diffusion";
  m.T = p.T;
  m.spec.dim = 2;
  m.spec.noise_dim = 1;
  m.spec.x0 = Vector(2);
  m.spec.x0 << p.x0, p.v0;
  const double damping = p.damping;
  m.spec.b = [damping](double, const Vector& x) {
    Vector b(2);
    b << x(1), -damping * x(1);
    return b;
  };
  m.spec.sigma = [p](double, const Vector& x) {
    Matrix s(2, 1);
    s << 0.0, integrated_gamma(p, x(0));
    return s;
  };
  m.aux.B_tilde = [](double) {
    Matrix B(2, 2);
    B << 0.0, 1.0, 0.0, 0.0;
    return B;
  };
  m.aux.beta_tilde = [](double) { return Vector::Zero(2); };
  const double g_end = integrated_gamma(p, p.target);
  m.aux.sigma_tilde = [g_end](double) {
    Matrix s(2, 1);
    s << 0.0, g_end;
    return s;
  };
  m.aux.L = Matrix(1, 2);
  m.aux.L << 1.0, 0.0;
  m.aux.v = Vector::Constant(1, p.target);
  m.delta = DeltaScaling::inverse_time_to_go(1, p.T);
  return m;
}

}  // namespace gbridge::sde
