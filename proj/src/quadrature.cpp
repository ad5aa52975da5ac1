#include "unsure/quadrature.hpp"

#include <cmath>

namespace unsure {
namespace {

struct Panel {
  double fa, fm, fb;
  double estimate;
};

Panel simpson(const std::function<double(double)>& f, double a, double b,
              double fa, double fm, double fb) {
  Panel p{fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb)};
  return p;
}

double adapt(const std::function<double(double)>& f, double a, double b,
             double fa, double fm, double fb, double whole, double tol,
             int depth, int max_depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  double flm = f(lm);
  double frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth >= max_depth) {
    require(std::isfinite(delta), ErrorCode::quadrature_diverged,
            "integrand not finite");
    return left + right + delta / 15.0;
  }
  if (std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, max_depth) +
         adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opts) {
  require(b >= a, ErrorCode::invalid_argument, "integrate: b < a");
  require(opts.initial_panels >= 1, ErrorCode::invalid_argument,
          "integrate: initial_panels < 1");
  if (a == b) return 0.0;
  double h = (b - a) / opts.initial_panels;
  double tol = opts.abs_tol / opts.initial_panels;
  double total = 0.0;
  for (int k = 0; k < opts.initial_panels; ++k) {
    double x0 = a + k * h;
    double x1 = (k + 1 == opts.initial_panels) ? b : a + (k + 1) * h;
    double xm = 0.5 * (x0 + x1);
    double f0 = f(x0), fm = f(xm), f1 = f(x1);
    double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
    total += adapt(f, x0, x1, f0, fm, f1, whole, tol, 0, opts.max_depth);
  }
  require(std::isfinite(total), ErrorCode::quadrature_diverged,
          "integral did not converge to a finite value");
  return total;
}

}  // namespace unsure
