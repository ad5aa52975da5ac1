#pragma once

#include <functional>

#include "unsure/common.hpp"

namespace unsure {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  // The interval is pre-split into this many panels before adaptive
  // refinement so narrow features away from the endpoints are not missed.
  int initial_panels = 64;
  int max_depth = 48;
};

// Adaptive composite Simpson rule on [a, b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opts = {});

}  // namespace unsure
