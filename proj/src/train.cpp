#include "unsure/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace unsure {

DenoiserNet::DenoiserNet(int n_in, int n_out, const NetConfig& cfg,
                         std::uint64_t seed)
    : n_in_(n_in), n_out_(n_out), residual_(cfg.residual),
      pixelwise_(cfg.pixelwise) {
  require(n_in > 0 && n_out > 0, ErrorCode::invalid_argument,
          "net dimensions must be positive");
  require(!residual_ || n_in == n_out, ErrorCode::config_error,
          "residual net requires matching input/output dimension");
  require(!pixelwise_ || n_in == n_out, ErrorCode::config_error,
          "pixelwise net requires matching input/output dimension");
  std::vector<int> dims;
  dims.push_back(pixelwise_ ? 1 : n_in);
  for (int h : cfg.hidden) {
    require(h > 0, ErrorCode::invalid_argument, "hidden width must be positive");
    dims.push_back(h);
  }
  dims.push_back(pixelwise_ ? 1 : n_out);

  Rng rng = substream(seed, "net_init");
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Mat W(dims[l + 1], dims[l]);
    // Zero output layer: residual nets start at the identity map and
    // plain nets at the zero map, so early multiplier ascent sees the
    // honest divergence of the initial estimator.
    if (l + 2 == dims.size()) {
      W.setZero();
    } else {
      double scale = cfg.gain / std::sqrt(static_cast<double>(dims[l]));
      for (Eigen::Index i = 0; i < W.rows(); ++i)
        for (Eigen::Index j = 0; j < W.cols(); ++j)
          W(i, j) = scale * draw_normal(rng);
    }
    W_.push_back(std::move(W));
    b_.push_back(Vec::Zero(dims[l + 1]));
  }
}

std::vector<int> DenoiserNet::dims() const {
  std::vector<int> d;
  d.push_back(n_in_);
  for (std::size_t l = 0; l + 1 < W_.size(); ++l)
    d.push_back(static_cast<int>(W_[l].rows()));
  d.push_back(n_out_);
  return d;
}

Vec DenoiserNet::forward(const Vec& y, Tape* tape) const {
  require(y.size() == n_in_, ErrorCode::dimension_mismatch, "net input size");
  const std::size_t L = W_.size();
  if (pixelwise_) {
    // One scalar stack applied per coordinate; tape stores the L+1
    // activations of coordinate i at acts[i*(L+1) .. i*(L+1)+L].
    if (tape) {
      tape->acts.clear();
      tape->acts.reserve(static_cast<std::size_t>(n_in_) * (L + 1));
    }
    Vec out(n_in_);
    for (int i = 0; i < n_in_; ++i) {
      Vec a = Vec::Constant(1, y[i]);
      if (tape) tape->acts.push_back(a);
      for (std::size_t l = 0; l < L; ++l) {
        Vec z = W_[l] * a + b_[l];
        if (l + 1 < L) z = z.array().tanh();
        a = std::move(z);
        if (tape) tape->acts.push_back(a);
      }
      out[i] = a[0];
    }
    return residual_ ? Vec(y + out) : out;
  }
  if (tape) {
    tape->acts.clear();
    tape->acts.push_back(y);
  }
  Vec a = y;
  for (std::size_t l = 0; l < L; ++l) {
    Vec z = W_[l] * a + b_[l];
    if (l + 1 < L) z = z.array().tanh();
    a = std::move(z);
    if (tape) tape->acts.push_back(a);
  }
  return residual_ ? Vec(y + a) : a;
}

Vec DenoiserNet::operator()(const Vec& y) const { return forward(y, nullptr); }

DenoiserNet::Grads DenoiserNet::zero_grads() const {
  Grads g;
  for (std::size_t l = 0; l < W_.size(); ++l) {
    g.W.push_back(Mat::Zero(W_[l].rows(), W_[l].cols()));
    g.b.push_back(Vec::Zero(b_[l].size()));
  }
  return g;
}

void DenoiserNet::Grads::setZero() {
  for (auto& w : W) w.setZero();
  for (auto& v : b) v.setZero();
}

void DenoiserNet::Grads::add_scaled(const Grads& other, double scale) {
  for (std::size_t l = 0; l < W.size(); ++l) {
    W[l] += scale * other.W[l];
    b[l] += scale * other.b[l];
  }
}

void DenoiserNet::backward(const Tape& tape, const Vec& dout, Grads& g) const {
  const std::size_t L = W_.size();
  if (pixelwise_) {
    require(tape.acts.size() == static_cast<std::size_t>(n_in_) * (L + 1),
            ErrorCode::invalid_argument, "tape does not match net");
    for (int i = 0; i < n_in_; ++i) {
      const std::size_t base = static_cast<std::size_t>(i) * (L + 1);
      Vec delta = Vec::Constant(1, dout[i]);
      for (int l = static_cast<int>(L) - 1; l >= 0; --l) {
        g.W[l].noalias() += delta * tape.acts[base + l].transpose();
        g.b[l] += delta;
        if (l > 0) {
          Vec back = W_[l].transpose() * delta;
          delta = back.array() * (1.0 - tape.acts[base + l].array().square());
        }
      }
    }
    return;
  }
  require(tape.acts.size() == L + 1, ErrorCode::invalid_argument,
          "tape does not match net");
  Vec delta = dout;  // gradient at the (pre-residual) output, which is linear
  for (int l = static_cast<int>(L) - 1; l >= 0; --l) {
    g.W[l].noalias() += delta * tape.acts[l].transpose();
    g.b[l] += delta;
    if (l > 0) {
      Vec back = W_[l].transpose() * delta;
      // tanh'(z) = 1 - tanh(z)^2, recovered from the stored activation.
      delta = back.array() * (1.0 - tape.acts[l].array().square());
    }
  }
}

int DenoiserNet::param_count() const {
  int p = 0;
  for (std::size_t l = 0; l < W_.size(); ++l)
    p += static_cast<int>(W_[l].size() + b_[l].size());
  return p;
}

Vec DenoiserNet::theta() const {
  Vec t(param_count());
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < W_.size(); ++l) {
    t.segment(at, W_[l].size()) =
        Eigen::Map<const Vec>(W_[l].data(), W_[l].size());
    at += W_[l].size();
    t.segment(at, b_[l].size()) = b_[l];
    at += b_[l].size();
  }
  return t;
}

void DenoiserNet::set_theta(const Vec& t) {
  require(t.size() == param_count(), ErrorCode::dimension_mismatch,
          "theta size mismatch");
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < W_.size(); ++l) {
    Eigen::Map<Vec>(W_[l].data(), W_[l].size()) = t.segment(at, W_[l].size());
    at += W_[l].size();
    b_[l] = t.segment(at, b_[l].size());
    at += b_[l].size();
  }
}

Vec DenoiserNet::flatten(const Grads& g) const {
  Vec t(param_count());
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < g.W.size(); ++l) {
    t.segment(at, g.W[l].size()) =
        Eigen::Map<const Vec>(g.W[l].data(), g.W[l].size());
    at += g.W[l].size();
    t.segment(at, g.b[l].size()) = g.b[l];
    at += g.b[l].size();
  }
  return t;
}

Adam::Adam(int dim, double lr)
    : m_(Vec::Zero(dim)), v_(Vec::Zero(dim)), lr_(lr) {}

void Adam::step(Vec& theta, const Vec& grad) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ++t_;
  m_ = b1 * m_ + (1.0 - b1) * grad;
  v_ = b2 * v_.array().matrix() + (1.0 - b2) * grad.array().square().matrix();
  double c1 = 1.0 - std::pow(b1, t_);
  double c2 = 1.0 - std::pow(b2, t_);
  theta.array() -=
      lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps);
}

int FamilySpec::multiplier_count() const {
  switch (tag) {
    case LossFamily::unsure:
    case LossFamily::hudson:
    case LossFamily::general:
      return 1;
    case LossFamily::pg_unsure:
      return 2;
    case LossFamily::c_unsure:
      return 2 * radius + 1;
  }
  return 1;
}

namespace {

double shifted_dot(const Vec& b, const Vec& delta, int lag) {
  const int n = static_cast<int>(b.size());
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += b[(i + lag + n) % n] * delta[i];
  return acc;
}

// Per-sample pieces shared by the theta descent and the eta ascent:
// u = M(eta) b, raw components r_c with divergence term 2 sum_c eta_c r_c.
struct FamilyPieces {
  Vec u;        // multiplier-weighted probe, as seen by the output gradient
  Vec raw;      // d(raw divergence)/d(eta_c)
  double term = 0.0;
};

FamilyPieces family_pieces(const FamilySpec& fam, const Vec& eta, const Vec& y,
                           const DivergenceProbe& probe, const Vec& delta) {
  FamilyPieces p;
  const int n = static_cast<int>(delta.size());
  switch (fam.tag) {
    case LossFamily::unsure: {
      p.raw = Vec::Constant(1, probe.b.dot(delta) / probe.tau);
      p.u = eta[0] * probe.b;
      break;
    }
    case LossFamily::c_unsure: {
      const int r = fam.radius;
      p.raw = Vec(2 * r + 1);
      for (int lag = -r; lag <= r; ++lag)
        p.raw[lag + r] = shifted_dot(probe.b, delta, lag) / probe.tau;
      p.u = Vec::Zero(n);
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int lag = -r; lag <= r; ++lag)
          acc += eta[lag + r] * probe.b[(i + lag + n) % n];
        p.u[i] = acc;
      }
      break;
    }
    case LossFamily::pg_unsure: {
      p.raw = Vec(2);
      p.raw[0] = probe.b.dot(delta) / probe.tau;
      p.raw[1] = y.cwiseProduct(probe.b).dot(delta) / probe.tau;
      p.u = (eta[0] + eta[1] * y.array()).matrix().cwiseProduct(probe.b);
      break;
    }
    case LossFamily::hudson: {
      Vec wb(n);
      for (int i = 0; i < n; ++i) wb[i] = fam.a(y[i]) * probe.b[i];
      p.raw = Vec::Constant(1, wb.dot(delta) / probe.tau);
      p.u = eta[0] * wb;
      break;
    }
    case LossFamily::general: {
      const auto& pinv = *fam.pinv;
      Vec pb = pinv.apply(probe.b);
      Vec pad = pinv.apply(pinv.op().apply(delta));
      p.raw = Vec::Constant(1, pb.dot(pad) / probe.tau);
      // u lives in the net's output space: A^T (A^+)^T A^+ b, scaled by eta.
      p.u = eta[0] * pinv.op().adjoint(pinv.apply_transpose(pb));
      break;
    }
  }
  p.term = 2.0 * eta.dot(p.raw);
  return p;
}

// Residual part of the loss and its gradient at the net output.
struct ResidualPieces {
  double value = 0.0;
  Vec grad;  // d(value)/d f0
};

ResidualPieces residual_pieces(const FamilySpec& fam, const Vec& f0,
                               const Vec& y) {
  ResidualPieces r;
  if (fam.tag == LossFamily::general) {
    const auto& pinv = *fam.pinv;
    Vec e = pinv.apply(pinv.op().apply(f0) - y);
    r.value = e.squaredNorm();
    r.grad = 2.0 * pinv.op().adjoint(pinv.apply_transpose(e));
  } else {
    Vec e = f0 - y;
    r.value = e.squaredNorm();
    r.grad = 2.0 * e;
  }
  return r;
}

void check_family(const FamilySpec& fam) {
  if (fam.tag == LossFamily::hudson)
    require(static_cast<bool>(fam.a), ErrorCode::config_error,
            "hudson family needs the weight function a");
  if (fam.tag == LossFamily::general)
    require(fam.pinv != nullptr, ErrorCode::config_error,
            "general family needs a pseudoinverse");
  if (fam.tag == LossFamily::c_unsure)
    require(fam.radius >= 0, ErrorCode::config_error, "negative radius");
}

}  // namespace

SaddleResult train_unsure(const Dataset& data, const FamilySpec& family,
                          const SaddleConfig& cfg) {
  require(data.count() > 0, ErrorCode::empty_dataset, "no training samples");
  require(cfg.epochs >= 0 && cfg.batch >= 1, ErrorCode::config_error,
          "bad epoch/batch configuration");
  require(cfg.tau > 0, ErrorCode::invalid_argument, "tau must be positive");
  check_family(family);

  const int count = data.count();
  const int m = data.dim();
  const int n_out = family.tag == LossFamily::general
                        ? family.pinv->op().cols()
                        : m;
  const double norm = static_cast<double>(n_out);
  const int k = family.multiplier_count();

  SaddleState state;
  state.net = DenoiserNet(m, n_out, cfg.net, cfg.seed);
  state.g = Vec::Zero(k);

  Vec theta = state.net.theta();
  Adam opt(static_cast<int>(theta.size()), cfg.theta_step);

  Rng order_rng = substream(cfg.seed, "batch_order");
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::vector<Rng> probe_rngs;
  probe_rngs.reserve(count);
  for (int i = 0; i < count; ++i)
    probe_rngs.push_back(substream(cfg.seed, "probe", i));

  const int batch = std::min(cfg.batch, count);

  // Measurement-consistency warm start: minimize the residual alone, then
  // initialize eta at the per-pixel residual level.
  for (int e = 0; e < cfg.warmup_epochs; ++e) {
    std::shuffle(order.begin(), order.end(), order_rng);
    for (int start = 0; start < count; start += batch) {
      int bsz = std::min(batch, count - start);
      auto grads = state.net.zero_grads();
      auto sample_grads = state.net.zero_grads();
      for (int bi = 0; bi < bsz; ++bi) {
        const Vec y = data.samples.row(order[start + bi]).transpose();
        DenoiserNet::Tape tape;
        Vec f0 = state.net.forward(y, &tape);
        ResidualPieces res = residual_pieces(family, f0, y);
        sample_grads.setZero();
        state.net.backward(tape, Vec(res.grad / norm), sample_grads);
        grads.add_scaled(sample_grads, 1.0 / bsz);
      }
      opt.step(theta, state.net.flatten(grads));
      state.net.set_theta(theta);
    }
  }

  if (cfg.eta_init) {
    require(cfg.eta_init->size() == k, ErrorCode::dimension_mismatch,
            "eta_init size does not match the family");
    state.eta = *cfg.eta_init;
  } else {
    double mean_res = 0.0;
    for (int i = 0; i < count; ++i) {
      const Vec y = data.samples.row(i).transpose();
      mean_res += residual_pieces(family, state.net(y), y).value / norm;
    }
    mean_res /= count;
    state.eta = Vec::Zero(k);
    int center = family.tag == LossFamily::c_unsure ? family.radius : 0;
    state.eta[center] = std::max(mean_res, 1e-6);
  }

  SaddleResult out;
  out.eta_trace = Mat::Zero(cfg.epochs, k);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double epoch_loss = 0.0;
    for (int start = 0; start < count; start += batch) {
      int bsz = std::min(batch, count - start);

      struct ProbeDraw {
        int idx;
        std::vector<DivergenceProbe> probes;
      };
      const int kp = std::max(1, cfg.probes);
      std::vector<ProbeDraw> draws;
      draws.reserve(bsz);
      for (int bi = 0; bi < bsz; ++bi) {
        ProbeDraw d;
        d.idx = order[start + bi];
        d.probes.reserve(kp);
        for (int j = 0; j < kp; ++j)
          d.probes.push_back(DivergenceProbe::draw(probe_rngs[d.idx], m, cfg.tau));
        draws.push_back(std::move(d));
      }

      auto grads = state.net.zero_grads();
      auto sample_grads = state.net.zero_grads();
      for (const auto& d : draws) {
        const Vec y = data.samples.row(d.idx).transpose();
        DenoiserNet::Tape tape0;
        Vec f0 = state.net.forward(y, &tape0);
        ResidualPieces res = residual_pieces(family, f0, y);

        sample_grads.setZero();
        Vec u_sum = Vec::Zero(f0.size());
        double term = 0.0;
        for (const auto& probe : d.probes) {
          DenoiserNet::Tape tape1;
          Vec f1 = state.net.forward(Vec(y + probe.tau * probe.b), &tape1);
          Vec delta = f1 - f0;
          FamilyPieces fp = family_pieces(family, state.eta, y, probe, delta);
          term += fp.term / kp;
          u_sum += fp.u;
          state.net.backward(tape1, Vec((2.0 / (cfg.tau * norm * kp)) * fp.u),
                             sample_grads);
        }

        double loss = (res.value + term) / norm;
        if (!std::isfinite(loss))
          fail(ErrorCode::non_finite_loss,
               "non-finite loss at epoch " + std::to_string(epoch) +
                   ", step " + std::to_string(state.step) + ", eta[0]=" +
                   std::to_string(state.eta[0]));
        epoch_loss += loss;

        Vec d0 = (res.grad - (2.0 / (cfg.tau * kp)) * u_sum) / norm;
        state.net.backward(tape0, d0, sample_grads);
        grads.add_scaled(sample_grads, 1.0 / bsz);
      }
      opt.step(theta, state.net.flatten(grads));
      state.net.set_theta(theta);

      // Ascent on eta with the same batch and probes, after the theta step.
      Vec div_grad = Vec::Zero(k);
      for (const auto& d : draws) {
        const Vec y = data.samples.row(d.idx).transpose();
        Vec f0 = state.net(y);
        for (const auto& probe : d.probes) {
          Vec f1 = state.net(Vec(y + probe.tau * probe.b));
          Vec delta = f1 - f0;
          FamilyPieces fp = family_pieces(family, state.eta, y, probe, delta);
          div_grad += (2.0 / (norm * bsz * kp)) * fp.raw;
        }
      }
      state.g = cfg.mu * state.g + (1.0 - cfg.mu) * div_grad;
      state.eta += cfg.alpha * state.g;
      ++state.step;
    }
    out.eta_trace.row(epoch) = state.eta.transpose();
    out.loss_trace.push_back(epoch_loss / count);
    if (cfg.on_epoch) cfg.on_epoch(epoch, state);
  }

  out.net = std::move(state.net);
  out.eta = state.eta;
  return out;
}

std::pair<double, Vec> loss_and_theta_grad(const DenoiserNet& net,
                                           const FamilySpec& family,
                                           const Vec& eta, const Vec& y,
                                           const DivergenceProbe& probe) {
  check_family(family);
  require(eta.size() == family.multiplier_count(),
          ErrorCode::dimension_mismatch, "eta size does not match the family");
  const double norm = static_cast<double>(net.output_dim());
  DenoiserNet::Tape tape0, tape1;
  Vec f0 = net.forward(y, &tape0);
  Vec f1 = net.forward(Vec(y + probe.tau * probe.b), &tape1);
  Vec delta = f1 - f0;
  ResidualPieces res = residual_pieces(family, f0, y);
  FamilyPieces fp = family_pieces(family, eta, y, probe, delta);
  double loss = (res.value + fp.term) / norm;
  auto grads = net.zero_grads();
  net.backward(tape0, Vec((res.grad - (2.0 / probe.tau) * fp.u) / norm), grads);
  net.backward(tape1, Vec((2.0 / (probe.tau * norm)) * fp.u), grads);
  return {loss, net.flatten(grads)};
}

double AnnealSchedule::at(int step) const {
  if (total_steps <= 1) return delta_max;
  double t = std::clamp(static_cast<double>(step) / (total_steps - 1), 0.0, 1.0);
  return delta_max * std::pow(delta_min / delta_max, t);
}

ScoreTrainResult train_score(const Dataset& data, AnnealSchedule schedule,
                             const ScoreTrainConfig& cfg) {
  require(data.count() > 0, ErrorCode::empty_dataset, "no training samples");
  require(cfg.epochs >= 0 && cfg.batch >= 1, ErrorCode::config_error,
          "bad epoch/batch configuration");
  require(schedule.delta_max >= schedule.delta_min && schedule.delta_min > 0,
          ErrorCode::config_error, "bad anneal schedule");

  const int count = data.count();
  const int n = data.dim();
  const int batch = std::min(cfg.batch, count);
  const int steps_per_epoch = (count + batch - 1) / batch;
  if (schedule.total_steps <= 0)
    schedule.total_steps = std::max(1, cfg.epochs * steps_per_epoch);

  ScoreTrainResult out;
  out.net = DenoiserNet(n, n, cfg.net, cfg.seed);
  Vec theta = out.net.theta();
  Adam opt(static_cast<int>(theta.size()), cfg.theta_step);

  Rng order_rng = substream(cfg.seed, "batch_order");
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::vector<Rng> probe_rngs;
  probe_rngs.reserve(count);
  for (int i = 0; i < count; ++i)
    probe_rngs.push_back(substream(cfg.seed, "ardae_probe", i));

  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double epoch_loss = 0.0;
    for (int start = 0; start < count; start += batch) {
      int bsz = std::min(batch, count - start);
      double delta_now = schedule.at(step);
      if (cfg.theta_step_final > 0.0 && schedule.total_steps > 1) {
        double t = std::min(1.0, static_cast<double>(step) /
                                     (schedule.total_steps - 1));
        opt.set_lr(cfg.theta_step *
                   std::pow(cfg.theta_step_final / cfg.theta_step, t));
      }
      auto grads = out.net.zero_grads();
      auto sample_grads = out.net.zero_grads();
      for (int bi = 0; bi < bsz; ++bi) {
        int idx = order[start + bi];
        const Vec y = data.samples.row(idx).transpose();
        Rng& rng = probe_rngs[idx];
        Vec b = draw_normal_vec(rng, n);
        double tau = delta_now * draw_normal(rng);
        DenoiserNet::Tape tape;
        Vec s = out.net.forward(Vec(y + tau * b), &tape);
        Vec r = b + tau * s;
        double loss = r.squaredNorm();
        if (!std::isfinite(loss))
          fail(ErrorCode::non_finite_loss,
               "non-finite AR-DAE loss at epoch " + std::to_string(epoch));
        epoch_loss += loss;
        sample_grads.setZero();
        out.net.backward(tape, Vec(2.0 * tau * r), sample_grads);
        grads.add_scaled(sample_grads, 1.0 / bsz);
      }
      opt.step(theta, out.net.flatten(grads));
      out.net.set_theta(theta);
      ++step;
    }
    out.loss_trace.push_back(epoch_loss / count);
  }
  return out;
}

ScoreField score_field_from_net(std::shared_ptr<const DenoiserNet> net) {
  require(net != nullptr, ErrorCode::invalid_argument, "null score net");
  return ScoreField::learned(
      [net](const Vec& y) -> Vec { return (*net)(y); });
}

Estimator plugin_inference(const ScoreField& field, const Dataset& data,
                           NoiseFamily family, int radius) {
  ScoreMoments moments = accumulate_moments(field, data, radius);
  MultiplierSolution sol;
  switch (family) {
    case NoiseFamily::isotropic:
      sol = solve_isotropic(moments, data.dim());
      break;
    case NoiseFamily::diagonal:
      sol = solve_diagonal(moments);
      break;
    case NoiseFamily::circulant:
      sol = solve_circulant(moments, radius);
      break;
    case NoiseFamily::poisson_gaussian:
      sol = solve_poisson_gaussian(moments, data.dim());
      break;
    case NoiseFamily::hudson:
      fail(ErrorCode::unsupported,
           "hudson plug-in needs solve_hudson with a weight function");
  }
  return Estimator::zed(field, sol, family);
}

namespace {
constexpr char kMagic[4] = {'U', 'N', 'S', 'R'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path_prefix, const DenoiserNet& net,
                     const Json& sidecar_extra) {
  std::ofstream bin(path_prefix + ".bin", std::ios::binary);
  require(bin.good(), ErrorCode::io_error, "cannot open checkpoint for write");
  bin.write(kMagic, 4);
  auto put_u32 = [&](std::uint32_t v) {
    bin.write(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  put_u32(kVersion);
  std::vector<int> dims = net.dims();
  put_u32(static_cast<std::uint32_t>(dims.size()));
  for (int d : dims) put_u32(static_cast<std::uint32_t>(d));
  put_u32((net.residual() ? 1u : 0u) | (net.pixelwise() ? 2u : 0u));
  Vec theta = net.theta();
  std::uint64_t p = static_cast<std::uint64_t>(theta.size());
  bin.write(reinterpret_cast<const char*>(&p), sizeof(p));
  bin.write(reinterpret_cast<const char*>(theta.data()),
            static_cast<std::streamsize>(sizeof(double) * theta.size()));
  require(bin.good(), ErrorCode::io_error, "checkpoint write failed");
  bin.close();

  Json side = sidecar_extra.is_object() ? sidecar_extra : Json::object();
  Json arch;
  arch["dims"] = dims;
  arch["residual"] = net.residual();
  arch["pixelwise"] = net.pixelwise();
  side["architecture"] = arch;
  side["format_version"] = kVersion;
  std::ofstream js(path_prefix + ".json");
  require(js.good(), ErrorCode::io_error, "cannot open sidecar for write");
  js << side.dump(2) << "\n";
}

std::pair<DenoiserNet, Json> load_checkpoint(const std::string& path_prefix) {
  std::ifstream bin(path_prefix + ".bin", std::ios::binary);
  require(bin.good(), ErrorCode::io_error, "cannot open checkpoint");
  char magic[4];
  bin.read(magic, 4);
  require(bin.good() && std::equal(magic, magic + 4, kMagic),
          ErrorCode::io_error, "bad checkpoint magic");
  auto get_u32 = [&]() {
    std::uint32_t v = 0;
    bin.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
  };
  std::uint32_t version = get_u32();
  require(version == kVersion, ErrorCode::io_error,
          "unsupported checkpoint version");
  std::uint32_t ndims = get_u32();
  require(ndims >= 2 && ndims < 64, ErrorCode::io_error, "bad dim count");
  std::vector<int> dims(ndims);
  for (auto& d : dims) d = static_cast<int>(get_u32());
  std::uint32_t flags = get_u32();
  std::uint64_t p = 0;
  bin.read(reinterpret_cast<char*>(&p), sizeof(p));
  NetConfig cfg;
  cfg.hidden.assign(dims.begin() + 1, dims.end() - 1);
  cfg.residual = (flags & 1u) != 0;
  cfg.pixelwise = (flags & 2u) != 0;
  DenoiserNet net(dims.front(), dims.back(), cfg, 0);
  require(p == static_cast<std::uint64_t>(net.param_count()),
          ErrorCode::io_error, "checkpoint parameter count mismatch");
  Vec theta(static_cast<Eigen::Index>(p));
  bin.read(reinterpret_cast<char*>(theta.data()),
           static_cast<std::streamsize>(sizeof(double) * p));
  require(bin.good(), ErrorCode::io_error, "truncated checkpoint");
  net.set_theta(theta);

  Json side = Json::object();
  std::ifstream js(path_prefix + ".json");
  if (js.good()) js >> side;
  return {std::move(net), std::move(side)};
}

}  // namespace unsure
