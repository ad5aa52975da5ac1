#pragma once

#include <memory>

#include "unsure/estimators.hpp"
#include "unsure/losses.hpp"

namespace unsure {

struct NetConfig {
  std::vector<int> hidden{64, 64};
  bool residual = true;   // f(y) = y + g_theta(y)
  bool pixelwise = false;  // share one scalar map across coordinates (1x1-conv style)
  double gain = 1.0;      // scales the hidden-layer init; <1 starts nearer the linear regime
};

// Fully connected stack with tanh hidden activations and linear output.
class DenoiserNet {
 public:
  DenoiserNet() = default;
  DenoiserNet(int n_in, int n_out, const NetConfig& cfg, std::uint64_t seed);

  Vec operator()(const Vec& y) const;

  struct Tape {
    std::vector<Vec> acts;  // acts[0] = input, acts[L] = pre-residual output
  };
  Vec forward(const Vec& y, Tape* tape) const;

  struct Grads {
    std::vector<Mat> W;
    std::vector<Vec> b;
    void setZero();
    void add_scaled(const Grads& other, double scale);
  };
  Grads zero_grads() const;
  void backward(const Tape& tape, const Vec& dout, Grads& g) const;

  int param_count() const;
  Vec theta() const;
  void set_theta(const Vec& t);
  Vec flatten(const Grads& g) const;

  int input_dim() const { return n_in_; }
  int output_dim() const { return n_out_; }
  bool residual() const { return residual_; }
  bool pixelwise() const { return pixelwise_; }
  std::vector<int> dims() const;

 private:
  int n_in_ = 0;
  int n_out_ = 0;
  bool residual_ = false;
  bool pixelwise_ = false;
  std::vector<Mat> W_;
  std::vector<Vec> b_;
};

class Adam {
 public:
  Adam(int dim, double lr);
  void step(Vec& theta, const Vec& grad);
  void set_lr(double lr) { lr_ = lr; }

 private:
  Vec m_, v_;
  int t_ = 0;
  double lr_;
};

enum class LossFamily { unsure, c_unsure, pg_unsure, hudson, general };

struct FamilySpec {
  LossFamily tag = LossFamily::unsure;
  int radius = 0;                       // c_unsure
  std::function<double(double)> a;      // hudson
  std::function<double(double)> a_prime;
  std::shared_ptr<Pseudoinverse> pinv;  // general

  int multiplier_count() const;
};

struct SaddleState {
  DenoiserNet net;
  Vec eta;
  Vec g;  // ascent momentum
  int step = 0;
};

struct SaddleConfig {
  int epochs = 200;
  int batch = 32;
  double theta_step = 5e-4;
  double alpha = 0.01;  // multiplier ascent step; 0 recovers plain SURE
  double mu = 0.9;
  double tau = 0.01;
  int probes = 1;  // probe vectors averaged per sample in the divergence estimate
  NetConfig net;
  std::uint64_t seed = 0;
  int warmup_epochs = 1;  // measurement-consistency epochs before the saddle
  std::optional<Vec> eta_init;  // overrides the warm-start initialization
  std::function<void(int, const SaddleState&)> on_epoch;
};

struct SaddleResult {
  DenoiserNet net;
  Vec eta;
  Mat eta_trace;  // epochs x multiplier count
  std::vector<double> loss_trace;
};

SaddleResult train_unsure(const Dataset& data, const FamilySpec& family,
                          const SaddleConfig& cfg);

// Per-pixel-normalized training loss for one sample and its reverse-mode
// theta gradient; the same internals the trainer steps on, exposed for
// gradient checks.
std::pair<double, Vec> loss_and_theta_grad(const DenoiserNet& net,
                                           const FamilySpec& family,
                                           const Vec& eta, const Vec& y,
                                           const DivergenceProbe& probe);

struct AnnealSchedule {
  double delta_max = 0.1;
  double delta_min = 0.001;
  int total_steps = 0;  // <= 0: derived from epochs * steps per epoch

  double at(int step) const;
};

struct ScoreTrainConfig {
  int epochs = 60;
  int batch = 128;
  double theta_step = 5e-4;
  double theta_step_final = 0.0;  // >0 decays the step geometrically to this value
  NetConfig net{.hidden = {64, 64}, .residual = false};
  std::uint64_t seed = 0;
};

struct ScoreTrainResult {
  DenoiserNet net;
  std::vector<double> loss_trace;
};

ScoreTrainResult train_score(const Dataset& data, AnnealSchedule schedule,
                             const ScoreTrainConfig& cfg);

ScoreField score_field_from_net(std::shared_ptr<const DenoiserNet> net);

// Accumulates moments of the score field over the dataset, solves the
// family's multipliers, and wraps the ZED estimator.
Estimator plugin_inference(const ScoreField& field, const Dataset& data,
                           NoiseFamily family, int radius = 0);

void save_checkpoint(const std::string& path_prefix, const DenoiserNet& net,
                     const Json& sidecar_extra);
std::pair<DenoiserNet, Json> load_checkpoint(const std::string& path_prefix);

}  // namespace unsure
