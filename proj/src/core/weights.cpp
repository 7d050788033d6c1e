#include "gbridge/core/weights.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gbridge {

namespace {

struct NonFinite {
  double s;
};

double checked(const std::function<double(double)>& f, double s) {
  const double v = f(s);
  if (!std::isfinite(v)) throw NonFinite{s};
  return v;
}

double simpson_step(const std::function<double(double)>& f, double a, double fa, double m,
                    double fm, double b, double fb, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = checked(f, lm);
  const double frm = checked(f, rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol || !(lm > a && rm < b))
    return left + right + delta / 15.0;
  return simpson_step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

double simpson_checked(const std::function<double(double)>& f, double a, double b, double tol,
                       int max_depth) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = checked(f, a);
  const double fm = checked(f, m);
  const double fb = checked(f, b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, fa, m, fm, b, fb, whole, tol, max_depth);
}

LogWeight invalid_at(double s, const std::string& state) {
  std::ostringstream os;
  os.precision(17);
  os << "non-finite integrand at s=" << s << ", x=" << state;
  return {std::numeric_limits<double>::quiet_NaN(), false, os.str()};
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
  try {
    return simpson_checked(f, a, b, tol, max_depth);
  } catch (const NonFinite& e) {
    std::ostringstream os;
    os.precision(17);
    os << "non-finite integrand at s=" << e.s;
    throw std::domain_error(os.str());
  }
}

LogWeight accumulate_log_weight(const PiecewiseConstantPath& path, const JumpIntegrand& integrand,
                                const Quadrature& quadrature) {
  const double T = path.horizon();
  double total = 0.0;
  for (std::size_t k = 0; k < path.interval_count(); ++k) {
    const double s1 = path.interval_start(k);
    const double s2 = path.interval_end(k);
    if (!(s2 > s1)) continue;
    const std::int64_t x = path.states()[k];
    double part = 0.0;
    switch (quadrature.kind) {
      case QuadratureKind::ClosedForm: {
        if (!quadrature.closed_form)
          throw std::invalid_argument("closed-form quadrature requested without an antiderivative");
        part = quadrature.closed_form(x, s1, s2);
        if (!std::isfinite(part)) return invalid_at(s2, std::to_string(x));
        break;
      }
      case QuadratureKind::AdaptiveSimpson: {
        const std::function<double(double)> g = [&](double s) { return integrand(s, x); };
        try {
          part = simpson_checked(g, s1, s2, quadrature.abs_tol, 50);
        } catch (const NonFinite& e) {
          return invalid_at(e.s, std::to_string(x));
        }
        break;
      }
      case QuadratureKind::Riemann: {
        const double span = s2 - s1;
        const auto cells = static_cast<std::size_t>(std::max(
            1.0, std::ceil(static_cast<double>(quadrature.riemann_points) * span / T)));
        const double h = span / static_cast<double>(cells);
        for (std::size_t c = 0; c < cells; ++c) {
          const double s = s1 + (static_cast<double>(c) + 0.5) * h;
          const double v = integrand(s, x);
          if (!std::isfinite(v)) return invalid_at(s, std::to_string(x));
          part += v * h;
        }
        break;
      }
    }
    total += part;
  }
  return {total, true, {}};
}

LogWeight accumulate_log_weight(const GridPath& path, const GridIntegrand& integrand) {
  const auto& t = path.times();
  const auto& x = path.values();
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double v = integrand(t[i], x[i]);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os.precision(17);
      os << "[" << x[i].transpose() << "]";
      return invalid_at(t[i], os.str());
    }
    total += v * (t[i + 1] - t[i]);
  }
  return {total, true, {}};
}

}  // namespace gbridge
