#include "unsure/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace unsure {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_gauss(double y, double mean, double var) {
  double d = y - mean;
  return -0.5 * (kLog2Pi + std::log(var)) - 0.5 * d * d / var;
}

}  // namespace

SignalPrior::SignalPrior(std::vector<PriorComponent> components)
    : components_(std::move(components)) {
  require(!components_.empty(), ErrorCode::invalid_argument,
          "prior needs at least one component");
  double total = 0.0;
  for (const auto& c : components_) {
    require(c.weight > 0.0, ErrorCode::invalid_argument,
            "prior weights must be positive");
    total += c.weight;
    if (const auto* g = std::get_if<GaussianComponent>(&c.kind)) {
      require(g->variance > 0.0, ErrorCode::invalid_argument,
              "gaussian component needs positive variance");
    }
  }
  require(std::abs(total - 1.0) <= 1e-9, ErrorCode::invalid_argument,
          "prior weights must sum to 1");
}

SignalPrior SignalPrior::two_deltas(double a) {
  return SignalPrior({{0.5, PointMass{-a}}, {0.5, PointMass{a}}});
}

SignalPrior SignalPrior::gaussian(double mean, double variance) {
  return SignalPrior({{1.0, GaussianComponent{mean, variance}}});
}

SignalPrior SignalPrior::spike_slab() {
  return SignalPrior({{0.5, GaussianComponent{0.0, 1.0}},
                      {0.5, PointMass{0.0}}});
}

double SignalPrior::mean() const {
  double m = 0.0;
  for (const auto& c : components_) {
    if (const auto* p = std::get_if<PointMass>(&c.kind)) {
      m += c.weight * p->location;
    } else {
      m += c.weight * std::get<GaussianComponent>(c.kind).mean;
    }
  }
  return m;
}

double SignalPrior::variance() const {
  double m = mean();
  double second = 0.0;
  for (const auto& c : components_) {
    if (const auto* p = std::get_if<PointMass>(&c.kind)) {
      second += c.weight * p->location * p->location;
    } else {
      const auto& g = std::get<GaussianComponent>(c.kind);
      second += c.weight * (g.variance + g.mean * g.mean);
    }
  }
  return second - m * m;
}

double SignalPrior::sample(Rng& rng) const {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double u = u01(rng);
  double acc = 0.0;
  const PriorComponent* chosen = &components_.back();
  for (const auto& c : components_) {
    acc += c.weight;
    if (u < acc) {
      chosen = &c;
      break;
    }
  }
  if (const auto* p = std::get_if<PointMass>(&chosen->kind)) {
    return p->location;
  }
  const auto& g = std::get<GaussianComponent>(chosen->kind);
  return g.mean + std::sqrt(g.variance) * draw_normal(rng);
}

Json SignalPrior::to_json() const {
  Json comps = Json::array();
  for (const auto& c : components_) {
    Json jc;
    jc["w"] = c.weight;
    if (const auto* p = std::get_if<PointMass>(&c.kind)) {
      jc["kind"] = "delta";
      jc["loc"] = p->location;
    } else {
      const auto& g = std::get<GaussianComponent>(c.kind);
      jc["kind"] = "gauss";
      jc["mean"] = g.mean;
      jc["var"] = g.variance;
    }
    comps.push_back(jc);
  }
  return Json{{"components", comps}};
}

SignalPrior SignalPrior::from_json(const Json& j) {
  require(j.contains("components") && j["components"].is_array(),
          ErrorCode::config_error, "prior json needs a components array");
  std::vector<PriorComponent> comps;
  for (const auto& jc : j["components"]) {
    PriorComponent c;
    c.weight = jc.value("w", 1.0);
    std::string kind = jc.value("kind", "");
    if (kind == "delta") {
      c.kind = PointMass{jc.value("loc", 0.0)};
    } else if (kind == "gauss") {
      c.kind = GaussianComponent{jc.value("mean", 0.0), jc.value("var", 1.0)};
    } else {
      fail(ErrorCode::config_error, "unknown prior component kind: " + kind);
    }
    comps.push_back(c);
  }
  return SignalPrior(std::move(comps));
}

NoiseModel::NoiseModel(Variant v) : v_(std::move(v)) {
  if (const auto* iso = std::get_if<IsotropicGaussian>(&v_)) {
    require(iso->sigma > 0.0, ErrorCode::invalid_argument,
            "isotropic sigma must be positive");
  } else if (const auto* d = std::get_if<DiagonalGaussian>(&v_)) {
    require(d->sigmas.size() > 0, ErrorCode::invalid_argument,
            "diagonal noise needs sigmas");
    require((d->sigmas.array() > 0.0).all(), ErrorCode::invalid_argument,
            "diagonal sigmas must be positive");
  } else if (const auto* c = std::get_if<CirculantGaussian>(&v_)) {
    require(c->kernel.size() > 0, ErrorCode::invalid_argument,
            "circulant noise needs a kernel");
    require(c->kernel.norm() > 0.0, ErrorCode::invalid_argument,
            "circulant kernel must be nonzero");
  } else if (const auto* pg = std::get_if<PoissonGaussian>(&v_)) {
    require(pg->gain > 0.0, ErrorCode::invalid_argument,
            "poisson gain must be strictly positive");
    require(pg->sigma >= 0.0, ErrorCode::invalid_argument,
            "poisson-gaussian sigma must be nonnegative");
  } else if (const auto* e = std::get_if<ExponentialFamily>(&v_)) {
    require(static_cast<bool>(e->a), ErrorCode::invalid_argument,
            "exp-family noise needs a weight function");
    require(e->variance_scale > 0.0, ErrorCode::invalid_argument,
            "exp-family variance scale must be positive");
  }
}

NoiseModel NoiseModel::isotropic(double sigma) {
  return NoiseModel(IsotropicGaussian{sigma});
}

NoiseModel NoiseModel::diagonal(Vec sigmas) {
  return NoiseModel(DiagonalGaussian{std::move(sigmas)});
}

NoiseModel NoiseModel::circulant(Vec kernel) {
  return NoiseModel(CirculantGaussian{std::move(kernel)});
}

NoiseModel NoiseModel::poisson_gaussian(double gain, double sigma) {
  return NoiseModel(PoissonGaussian{gain, sigma});
}

NoiseModel NoiseModel::exp_family(std::function<double(double)> a,
                                  double variance_scale) {
  return NoiseModel(ExponentialFamily{std::move(a), variance_scale, {}});
}

NoiseModel NoiseModel::exp_family_const(double a_value, double variance_scale) {
  require(a_value > 0.0, ErrorCode::invalid_argument,
          "constant weight must be positive");
  return NoiseModel(ExponentialFamily{
      [a_value](double) { return a_value; }, variance_scale, a_value});
}

double NoiseModel::covariance_trace(int n) const {
  if (const auto* iso = std::get_if<IsotropicGaussian>(&v_)) {
    return n * iso->sigma * iso->sigma;
  }
  if (const auto* d = std::get_if<DiagonalGaussian>(&v_)) {
    require(d->sigmas.size() == n, ErrorCode::dimension_mismatch,
            "diagonal noise dimension mismatch");
    return d->sigmas.squaredNorm();
  }
  if (const auto* c = std::get_if<CirculantGaussian>(&v_)) {
    return n * c->kernel.squaredNorm();
  }
  fail(ErrorCode::unsupported, "covariance trace undefined for this noise");
}

Json NoiseModel::to_json() const {
  Json j;
  if (const auto* iso = std::get_if<IsotropicGaussian>(&v_)) {
    j["variant"] = "isotropic";
    j["sigma"] = iso->sigma;
  } else if (const auto* d = std::get_if<DiagonalGaussian>(&v_)) {
    j["variant"] = "diagonal";
    j["sigmas"] = std::vector<double>(d->sigmas.begin(), d->sigmas.end());
  } else if (const auto* c = std::get_if<CirculantGaussian>(&v_)) {
    j["variant"] = "circulant";
    j["kernel"] = std::vector<double>(c->kernel.begin(), c->kernel.end());
  } else if (const auto* pg = std::get_if<PoissonGaussian>(&v_)) {
    j["variant"] = "poisson_gaussian";
    j["gain"] = pg->gain;
    j["sigma"] = pg->sigma;
  } else {
    const auto& e = std::get<ExponentialFamily>(v_);
    require(e.const_a.has_value(), ErrorCode::unsupported,
            "only constant-weight exp-family noise serializes");
    j["variant"] = "exp_family";
    j["a_const"] = *e.const_a;
    j["variance_scale"] = e.variance_scale;
  }
  return j;
}

NoiseModel NoiseModel::from_json(const Json& j) {
  std::string variant = j.value("variant", "");
  if (variant == "isotropic") {
    return isotropic(j.value("sigma", 1.0));
  }
  if (variant == "diagonal") {
    auto v = j.value("sigmas", std::vector<double>{});
    return diagonal(Eigen::Map<const Vec>(v.data(), v.size()));
  }
  if (variant == "circulant") {
    auto v = j.value("kernel", std::vector<double>{});
    return circulant(Eigen::Map<const Vec>(v.data(), v.size()));
  }
  if (variant == "poisson_gaussian") {
    return poisson_gaussian(j.value("gain", 1.0), j.value("sigma", 0.0));
  }
  if (variant == "exp_family") {
    return exp_family_const(j.value("a_const", 1.0),
                            j.value("variance_scale", 1.0));
  }
  fail(ErrorCode::config_error, "unknown noise variant: " + variant);
}

NoisyMarginal::NoisyMarginal(SignalPrior prior, double sigma)
    : prior_(std::move(prior)), sigma_(sigma) {
  require(sigma > 0.0, ErrorCode::invalid_argument,
          "marginal needs positive sigma");
  double s2 = sigma * sigma;
  for (const auto& c : prior_.components()) {
    MixComp m;
    m.log_w = std::log(c.weight);
    if (const auto* p = std::get_if<PointMass>(&c.kind)) {
      m.mean = p->location;
      m.var = s2;
    } else {
      const auto& g = std::get<GaussianComponent>(c.kind);
      m.mean = g.mean;
      m.var = g.variance + s2;
    }
    mix_.push_back(m);
  }
}

double NoisyMarginal::log_pdf(double y) const {
  double lmax = -std::numeric_limits<double>::infinity();
  for (const auto& m : mix_) {
    lmax = std::max(lmax, m.log_w + log_gauss(y, m.mean, m.var));
  }
  double acc = 0.0;
  for (const auto& m : mix_) {
    acc += std::exp(m.log_w + log_gauss(y, m.mean, m.var) - lmax);
  }
  return lmax + std::log(acc);
}

double NoisyMarginal::pdf(double y) const { return std::exp(log_pdf(y)); }

double NoisyMarginal::score(double y) const {
  double lmax = -std::numeric_limits<double>::infinity();
  for (const auto& m : mix_) {
    lmax = std::max(lmax, m.log_w + log_gauss(y, m.mean, m.var));
  }
  double den = 0.0;
  double num = 0.0;
  for (const auto& m : mix_) {
    double r = std::exp(m.log_w + log_gauss(y, m.mean, m.var) - lmax);
    den += r;
    num += r * (-(y - m.mean) / m.var);
  }
  return num / den;
}

double NoisyMarginal::posterior_mean(double y) const {
  double s2 = sigma_ * sigma_;
  double lmax = -std::numeric_limits<double>::infinity();
  for (const auto& m : mix_) {
    lmax = std::max(lmax, m.log_w + log_gauss(y, m.mean, m.var));
  }
  double den = 0.0;
  double num = 0.0;
  for (std::size_t k = 0; k < mix_.size(); ++k) {
    const auto& m = mix_[k];
    double r = std::exp(m.log_w + log_gauss(y, m.mean, m.var) - lmax);
    den += r;
    const auto& c = prior_.components()[k];
    double pm;
    if (const auto* p = std::get_if<PointMass>(&c.kind)) {
      pm = p->location;
    } else {
      const auto& g = std::get<GaussianComponent>(c.kind);
      pm = (g.mean * s2 + y * g.variance) / (g.variance + s2);
    }
    num += r * pm;
  }
  return num / den;
}

double NoisyMarginal::mmse() const {
  double s2 = sigma_ * sigma_;
  double s = sigma_;
  double total = 0.0;
  for (const auto& c : prior_.components()) {
    if (const auto* p = std::get_if<PointMass>(&c.kind)) {
      double x = p->location;
      auto inner = [&](double y) {
        double d = posterior_mean(y) - x;
        return std::exp(log_gauss(y, x, s2)) * d * d;
      };
      total += c.weight * integrate(inner, x - 10 * s, x + 10 * s);
    } else {
      const auto& g = std::get<GaussianComponent>(c.kind);
      double sx = std::sqrt(g.variance);
      auto outer = [&](double x) {
        auto inner = [&](double y) {
          double d = posterior_mean(y) - x;
          return std::exp(log_gauss(y, x, s2)) * d * d;
        };
        QuadratureOptions inner_opts;
        inner_opts.abs_tol = 1e-11;
        inner_opts.initial_panels = 32;
        return std::exp(log_gauss(x, g.mean, g.variance)) *
               integrate(inner, x - 10 * s, x + 10 * s, inner_opts);
      };
      QuadratureOptions outer_opts;
      outer_opts.abs_tol = 1e-9;
      outer_opts.initial_panels = 48;
      total += c.weight *
               integrate(outer, g.mean - 10 * sx, g.mean + 10 * sx, outer_opts);
    }
  }
  require(total >= 0.0 && total <= s2 + 1e-9, ErrorCode::invalid_mmse,
          "mmse outside [0, sigma^2]");
  return total;
}

double NoisyMarginal::expect(const std::function<double(double)>& g) const {
  double total = 0.0;
  for (const auto& m : mix_) {
    double sd = std::sqrt(m.var);
    auto f = [&](double y) {
      return std::exp(log_gauss(y, m.mean, m.var)) * g(y);
    };
    total += std::exp(m.log_w) *
             integrate(f, m.mean - 10 * sd, m.mean + 10 * sd);
  }
  return total;
}

double NoisyMarginal::expected_score_sq() const {
  return expect([this](double y) {
    double s = score(y);
    return s * s;
  });
}

double NoisyMarginal::mmse_fisher() const {
  double s2 = sigma_ * sigma_;
  return s2 - s2 * s2 * expected_score_sq();
}

Vec add_noise(const Vec& x, const NoiseModel& noise, Rng& rng) {
  const int n = static_cast<int>(x.size());
  if (const auto* iso = noise.get_if<IsotropicGaussian>()) {
    return x + iso->sigma * draw_normal_vec(rng, n);
  }
  if (const auto* d = noise.get_if<DiagonalGaussian>()) {
    require(d->sigmas.size() == n, ErrorCode::dimension_mismatch,
            "diagonal noise dimension mismatch");
    return x + d->sigmas.cwiseProduct(draw_normal_vec(rng, n));
  }
  if (const auto* c = noise.get_if<CirculantGaussian>()) {
    require(c->kernel.size() <= n, ErrorCode::dimension_mismatch,
            "circulant kernel longer than signal");
    Vec w = draw_normal_vec(rng, n);
    Vec y = x;
    const int p = static_cast<int>(c->kernel.size());
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < p; ++j) {
        acc += c->kernel[j] * w[(i - j + n) % n];
      }
      y[i] += acc;
    }
    return y;
  }
  if (const auto* pg = noise.get_if<PoissonGaussian>()) {
    Vec y(n);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      require(x[i] >= 0.0, ErrorCode::invalid_poisson_input,
              "poisson-gaussian noise needs nonnegative signal");
      std::poisson_distribution<long> pois(x[i] / pg->gain);
      y[i] = pg->gain * static_cast<double>(pois(rng)) + pg->sigma * n01(rng);
    }
    return y;
  }
  const auto& e = std::get<ExponentialFamily>(noise.variant());
  require(e.const_a.has_value(), ErrorCode::unsupported,
          "sampling exp-family noise requires a constant weight");
  double sd = std::sqrt(*e.const_a * e.variance_scale);
  return x + sd * draw_normal_vec(rng, n);
}

Dataset sample_measurements(const SignalPrior& prior, const NoiseModel& noise,
                            int n, int count, std::uint64_t seed,
                            bool keep_ground_truth) {
  require(n > 0 && count > 0, ErrorCode::invalid_argument,
          "dataset needs positive n and count");
  Rng rng = substream(seed, "sample_measurements");
  Dataset d;
  d.seed = seed;
  d.samples.resize(count, n);
  if (keep_ground_truth) d.ground_truth = Mat(count, n);
  Vec x(n);
  for (int s = 0; s < count; ++s) {
    for (int i = 0; i < n; ++i) x[i] = prior.sample(rng);
    if (keep_ground_truth) d.ground_truth->row(s) = x;
    d.samples.row(s) = add_noise(x, noise, rng);
  }
  return d;
}

Json model_pair_to_json(const SignalPrior& prior, const NoiseModel& noise) {
  return Json{{"prior", prior.to_json()}, {"noise", noise.to_json()}};
}

std::pair<SignalPrior, NoiseModel> model_pair_from_json(const Json& j) {
  require(j.contains("prior") && j.contains("noise"), ErrorCode::config_error,
          "model json needs prior and noise");
  return {SignalPrior::from_json(j["prior"]),
          NoiseModel::from_json(j["noise"])};
}

}  // namespace unsure
