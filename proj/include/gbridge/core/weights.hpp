#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "gbridge/core/path.hpp"

namespace gbridge {

/// Integrand of a log weight along a jump path: (time, frozen state) -> value.
using JumpIntegrand = std::function<double(double, std::int64_t)>;
/// Exact integral of a jump integrand over [s1, s2] with the state frozen.
using IntervalIntegral = std::function<double(std::int64_t, double, double)>;
using GridIntegrand = std::function<double(double, const Eigen::VectorXd&)>;

enum class QuadratureKind { ClosedForm, AdaptiveSimpson, Riemann };

struct Quadrature {
  QuadratureKind kind = QuadratureKind::AdaptiveSimpson;
  /// Absolute tolerance per constancy interval for adaptive Simpson.
  double abs_tol = 1e-9;
  /// Node count over [0, T] for the midpoint Riemann rule.
  std::size_t riemann_points = 100000;
  /// Antiderivative-based integral, required for ClosedForm.
  IntervalIntegral closed_form;

  static Quadrature closed(IntervalIntegral f) {
    Quadrature q;
    q.kind = QuadratureKind::ClosedForm;
    q.closed_form = std::move(f);
    return q;
  }
  static Quadrature adaptive(double tol = 1e-9) {
    Quadrature q;
    q.kind = QuadratureKind::AdaptiveSimpson;
    q.abs_tol = tol;
    return q;
  }
  static Quadrature riemann(std::size_t points) {
    Quadrature q;
    q.kind = QuadratureKind::Riemann;
    q.riemann_points = points;
    return q;
  }
};

/// Outcome of a path integral. When `valid` is false, `value` is NaN and
/// `reason` names the offending (s, x).
struct LogWeight {
  double value = 0.0;
  bool valid = true;
  std::string reason;
};

/// Integral over [0, T] of `integrand` along a piecewise-constant path,
/// interval by interval.
LogWeight accumulate_log_weight(const PiecewiseConstantPath& path, const JumpIntegrand& integrand,
                                const Quadrature& quadrature = {});

/// Left-point Riemann sum sum_i integrand(t_i, X_i) (t_{i+1} - t_i) on the path grid.
LogWeight accumulate_log_weight(const GridPath& path, const GridIntegrand& integrand);

/// Adaptive Simpson on [a, b] to absolute tolerance `tol`. Throws
/// std::domain_error carrying the abscissa if the integrand is non-finite.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth = 50);

}  // namespace gbridge
