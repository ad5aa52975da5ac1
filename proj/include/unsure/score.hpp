#pragma once

#include <functional>
#include <memory>
#include <variant>
#include <vector>

#include "unsure/models.hpp"

namespace unsure {

// Exact marginal score applied pixelwise. One marginal is shared across all
// pixels; with per-pixel noise levels there is one marginal per pixel.
struct AnalyticScore {
  std::vector<NoisyMarginal> marginals;
};

// 1-D lookup table with linear interpolation, applied pixelwise.
struct TabulatedScore {
  Vec grid_y;
  Vec grid_s;
};

// Arbitrary learned vector field s_theta(y).
struct LearnedScore {
  std::function<Vec(const Vec&)> field;
};

class ScoreField {
 public:
  using Variant = std::variant<AnalyticScore, TabulatedScore, LearnedScore>;

  explicit ScoreField(Variant v);

  static ScoreField analytic(NoisyMarginal marginal);
  static ScoreField analytic_per_pixel(std::vector<NoisyMarginal> marginals);
  static ScoreField tabulated(Vec grid_y, Vec grid_s);
  static ScoreField learned(std::function<Vec(const Vec&)> field);

  Vec operator()(const Vec& y) const;

  const Variant& variant() const { return v_; }
  template <class T>
  const T* get_if() const {
    return std::get_if<T>(&v_);
  }

 private:
  Variant v_;
};

// Sample moments of the score over a dataset. pg(a, b) stores
// h_{a,b} = sum_i mean_samples y_i^a s_i^b for a, b in {0, 1, 2}.
struct ScoreMoments {
  int n = 0;
  int sample_count = 0;
  int radius = 0;
  double trace_H = 0.0;
  Mat H;        // n x n, mean of s s^T
  Vec autocorr; // length 2*radius+1, centered; lag 0 at index radius
  Mat pg;       // 3 x 3

  Json to_json() const;
  static ScoreMoments from_json(const Json& j);
};

ScoreMoments accumulate_moments(const ScoreField& field, const Dataset& data,
                                int radius = 0);

// Population moments for i.i.d. pixels under an exact marginal, computed by
// quadrature instead of sampling.
ScoreMoments analytic_moments(const NoisyMarginal& marginal, int n,
                              int radius = 0);

// Central-difference divergence sum_i df_i/dy_i; the step is scaled
// per-coordinate as step * (1 + |y_i|).
double fd_divergence(const std::function<Vec(const Vec&)>& f, const Vec& y,
                     double step = 1e-4);

}  // namespace unsure
