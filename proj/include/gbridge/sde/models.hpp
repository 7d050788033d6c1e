#pragma once

// Built-in models: true dynamics, auxiliary process, horizon and default
// Delta scaling bundled together.

#include <optional>
#include <string>

#include "gbridge/sde/tables.hpp"

namespace gbridge::sde {

struct SdeModel {
  std::string name;
  SdeSpec spec;
  LinearAuxiliarySpec aux;
  double T = 1.0;
  DeltaScaling delta;
};

/// dX = sigma dW in R^d, conditioned on X_T = v; the auxiliary process is the
/// same Brownian motion, so the guided process is the exact bridge.
SdeModel brownian_model(const Vector& x0, const Vector& v, double T, double sigma = 1.0);

/// dX = theta (mean - X) dt + sigma dW, conditioned on X_T = v, guided by the
/// Ornstein-Uhlenbeck process with rate aux_theta (0 gives a Brownian guide).
SdeModel ou_model(double x0, double v, double T, double theta, double mean, double sigma,
                  double aux_theta = 0.0);

struct IntegratedDiffusionParams {
  double x0 = 0.0;
  double v0 = 0.0;
  /// Conditioning position.
  double target = 1.0;
  double T = 1.0;
  /// Velocity damping: beta(t, x) = -damping x_2.
  double damping = 0.0;
  /// gamma(t, x_1) = gamma0 + gamma1 sin(x_1); requires |gamma1| < gamma0.
  double gamma0 = 1.0;
  double gamma1 = 0.0;
};

/// dX_1 = X_2 dt, dX_2 = beta dt + gamma(X_1) dW observed through L = [1 0];
/// auxiliary B~ = [[0, 1], [0, 0]], beta~ = 0, sigma~ = [0; gamma(target)];
/// Delta(t) = (T - t)^{-1}.
SdeModel integrated_diffusion_model(const IntegratedDiffusionParams& p);

/// gamma(x_1) of the integrated diffusion model.
double integrated_gamma(const IntegratedDiffusionParams& p, double x1);

}  // namespace gbridge::sde
