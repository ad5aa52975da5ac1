#pragma once

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "unsure/common.hpp"
#include "unsure/quadrature.hpp"

namespace unsure {

using Json = nlohmann::json;

struct PointMass {
  double location = 0.0;
};

struct GaussianComponent {
  double mean = 0.0;
  double variance = 1.0;
};

struct PriorComponent {
  double weight = 1.0;
  std::variant<PointMass, GaussianComponent> kind;
};

// Finite mixture of point masses and Gaussians, applied i.i.d. per pixel.
class SignalPrior {
 public:
  explicit SignalPrior(std::vector<PriorComponent> components);

  static SignalPrior two_deltas(double a = 0.5);
  static SignalPrior gaussian(double mean = 0.0, double variance = 1.0);
  static SignalPrior spike_slab();

  const std::vector<PriorComponent>& components() const { return components_; }
  double mean() const;
  double variance() const;
  double sample(Rng& rng) const;

  Json to_json() const;
  static SignalPrior from_json(const Json& j);

 private:
  std::vector<PriorComponent> components_;
};

struct IsotropicGaussian {
  double sigma = 1.0;
};

struct DiagonalGaussian {
  Vec sigmas;
};

// y = x + k * e with e white Gaussian and * the mod-n circular convolution.
struct CirculantGaussian {
  Vec kernel;
};

// y = gain * Poisson(x / gain) + sigma * e.
struct PoissonGaussian {
  double gain = 1.0;
  double sigma = 0.0;
};

// Noise whose score identity uses the weight function a(y). Sampling is only
// defined here when a is constant, in which case the model is Gaussian with
// variance a * variance_scale.
struct ExponentialFamily {
  std::function<double(double)> a;
  double variance_scale = 1.0;
  std::optional<double> const_a;  // set when a is known constant
};

class NoiseModel {
 public:
  using Variant = std::variant<IsotropicGaussian, DiagonalGaussian,
                               CirculantGaussian, PoissonGaussian,
                               ExponentialFamily>;

  explicit NoiseModel(Variant v);

  static NoiseModel isotropic(double sigma);
  static NoiseModel diagonal(Vec sigmas);
  static NoiseModel circulant(Vec kernel);
  static NoiseModel poisson_gaussian(double gain, double sigma);
  static NoiseModel exp_family(std::function<double(double)> a,
                               double variance_scale);
  static NoiseModel exp_family_const(double a_value, double variance_scale);

  const Variant& variant() const { return v_; }
  template <class T>
  const T* get_if() const {
    return std::get_if<T>(&v_);
  }

  // Trace of the noise covariance for an n-pixel image (Gaussian variants).
  double covariance_trace(int n) const;

  Json to_json() const;
  static NoiseModel from_json(const Json& j);

 private:
  Variant v_;
};

// Mixture representation of the measurement marginal q_y for scalar pixels
// under Gaussian noise of variance sigma^2.
class NoisyMarginal {
 public:
  NoisyMarginal(SignalPrior prior, double sigma);

  double sigma() const { return sigma_; }
  const SignalPrior& prior() const { return prior_; }

  double pdf(double y) const;
  double log_pdf(double y) const;
  double score(double y) const;
  double posterior_mean(double y) const;

  // E[(E[x|y] - x)^2] by nested quadrature over the prior mixture.
  double mmse() const;
  // sigma^2 - sigma^4 * E[score^2]; agrees with mmse() for exact marginals.
  double mmse_fisher() const;
  double expected_score_sq() const;
  // E[g(y)] under q_y by per-component quadrature.
  double expect(const std::function<double(double)>& g) const;

 private:
  struct MixComp {
    double log_w;
    double mean;
    double var;
  };

  SignalPrior prior_;
  double sigma_;
  std::vector<MixComp> mix_;
};

struct Dataset {
  Mat samples;                     // count x n
  std::optional<Mat> ground_truth;  // count x n when available
  std::uint64_t seed = 0;

  int count() const { return static_cast<int>(samples.rows()); }
  int dim() const { return static_cast<int>(samples.cols()); }
};

Dataset sample_measurements(const SignalPrior& prior, const NoiseModel& noise,
                            int n, int count, std::uint64_t seed,
                            bool keep_ground_truth = true);

// Applies the noise model to one clean vector.
Vec add_noise(const Vec& x, const NoiseModel& noise, Rng& rng);

Json model_pair_to_json(const SignalPrior& prior, const NoiseModel& noise);
std::pair<SignalPrior, NoiseModel> model_pair_from_json(const Json& j);

}  // namespace unsure
