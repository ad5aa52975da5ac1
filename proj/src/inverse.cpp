#include "unsure/inverse.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

namespace unsure {

LinearOperator::LinearOperator(Variant v) : v_(std::move(v)) {
  if (const auto* e = std::get_if<ExplicitOp>(&v_)) {
    require(e->A.size() > 0, ErrorCode::invalid_argument, "empty matrix");
    m_ = static_cast<int>(e->A.rows());
    n_ = static_cast<int>(e->A.cols());
  } else if (const auto* mk = std::get_if<MaskOp>(&v_)) {
    require(mk->n > 0 && !mk->kept.empty(), ErrorCode::invalid_argument,
            "mask needs kept indices");
    for (int i : mk->kept) {
      require(i >= 0 && i < mk->n, ErrorCode::invalid_argument,
              "mask index out of range");
    }
    m_ = static_cast<int>(mk->kept.size());
    n_ = mk->n;
  } else {
    const auto& c = std::get<CirculantBlurOp>(v_);
    require(c.n > 0, ErrorCode::invalid_argument, "blur needs n");
    require(c.kernel.size() % 2 == 1 &&
                c.kernel.size() <= static_cast<Eigen::Index>(c.n),
            ErrorCode::invalid_argument,
            "blur kernel must be odd-length and fit the signal");
    m_ = n_ = c.n;
  }
}

LinearOperator LinearOperator::dense(Mat A) {
  return LinearOperator(ExplicitOp{std::move(A)});
}

LinearOperator LinearOperator::mask(int n, std::vector<int> kept) {
  return LinearOperator(MaskOp{n, std::move(kept)});
}

LinearOperator LinearOperator::circulant_blur(int n, Vec kernel) {
  return LinearOperator(CirculantBlurOp{n, std::move(kernel)});
}

LinearOperator LinearOperator::identity(int n) {
  std::vector<int> kept(n);
  std::iota(kept.begin(), kept.end(), 0);
  return mask(n, std::move(kept));
}

namespace {

Vec blur_apply(const CirculantBlurOp& c, const Vec& x) {
  const int n = c.n;
  const int r = static_cast<int>(c.kernel.size() / 2);
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = -r; j <= r; ++j) {
      acc += c.kernel[j + r] * x[(i - j + n) % n];
    }
    out[i] = acc;
  }
  return out;
}

Vec blur_adjoint(const CirculantBlurOp& c, const Vec& u) {
  const int n = c.n;
  const int r = static_cast<int>(c.kernel.size() / 2);
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = -r; j <= r; ++j) {
      acc += c.kernel[j + r] * u[(i + j + n) % n];
    }
    out[i] = acc;
  }
  return out;
}

// Real spectrum samples of the centered kernel on the length-n DFT grid.
std::vector<std::complex<double>> blur_spectrum(const CirculantBlurOp& c) {
  const int n = c.n;
  const int r = static_cast<int>(c.kernel.size() / 2);
  std::vector<std::complex<double>> bins(n);
  const double w = 2.0 * std::numbers::pi / n;
  for (int k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (int j = -r; j <= r; ++j) {
      acc += c.kernel[j + r] * std::exp(std::complex<double>(0.0, -w * k * j));
    }
    bins[k] = acc;
  }
  return bins;
}

Vec blur_pinv(const CirculantBlurOp& c, const Vec& u, double ridge,
              bool transpose) {
  const int n = c.n;
  auto bins = blur_spectrum(c);
  const double w = 2.0 * std::numbers::pi / n;
  std::vector<std::complex<double>> uh(n);
  for (int k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (int i = 0; i < n; ++i) {
      acc += u[i] * std::exp(std::complex<double>(0.0, -w * k * i));
    }
    uh[k] = acc;
  }
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    std::complex<double> acc(0.0, 0.0);
    for (int k = 0; k < n; ++k) {
      double denom = std::norm(bins[k]) + ridge;
      std::complex<double> mult =
          (transpose ? bins[k] : std::conj(bins[k])) / denom;
      acc += uh[k] * mult * std::exp(std::complex<double>(0.0, w * k * i));
    }
    out[i] = acc.real() / n;
  }
  return out;
}

}  // namespace

Vec LinearOperator::apply(const Vec& x) const {
  require(x.size() == n_, ErrorCode::operator_mismatch,
          "operator apply: wrong input size");
  if (const auto* e = std::get_if<ExplicitOp>(&v_)) return e->A * x;
  if (const auto* mk = std::get_if<MaskOp>(&v_)) {
    Vec u(m_);
    for (int i = 0; i < m_; ++i) u[i] = x[mk->kept[i]];
    return u;
  }
  return blur_apply(std::get<CirculantBlurOp>(v_), x);
}

Vec LinearOperator::adjoint(const Vec& u) const {
  require(u.size() == m_, ErrorCode::operator_mismatch,
          "operator adjoint: wrong input size");
  if (const auto* e = std::get_if<ExplicitOp>(&v_)) {
    return e->A.transpose() * u;
  }
  if (const auto* mk = std::get_if<MaskOp>(&v_)) {
    Vec x = Vec::Zero(n_);
    for (int i = 0; i < m_; ++i) x[mk->kept[i]] = u[i];
    return x;
  }
  return blur_adjoint(std::get<CirculantBlurOp>(v_), u);
}

Json LinearOperator::to_json() const {
  Json j;
  if (const auto* e = std::get_if<ExplicitOp>(&v_)) {
    j["kind"] = "explicit";
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < e->A.rows(); ++r) {
      rows.push_back(std::vector<double>(e->A.row(r).begin(),
                                         e->A.row(r).end()));
    }
    j["matrix"] = rows;
  } else if (const auto* mk = std::get_if<MaskOp>(&v_)) {
    j["kind"] = "mask";
    j["n"] = mk->n;
    j["kept"] = mk->kept;
  } else {
    const auto& c = std::get<CirculantBlurOp>(v_);
    j["kind"] = "circulant_blur";
    j["n"] = c.n;
    j["kernel"] = std::vector<double>(c.kernel.begin(), c.kernel.end());
  }
  return j;
}

LinearOperator LinearOperator::from_json(const Json& j) {
  std::string kind = j.value("kind", "");
  if (kind == "explicit") {
    const auto& rows = j.at("matrix");
    require(rows.is_array() && !rows.empty(), ErrorCode::config_error,
            "explicit operator needs a matrix");
    Mat A(rows.size(), rows[0].size());
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      for (Eigen::Index c = 0; c < A.cols(); ++c) {
        A(r, c) = rows[r][c].get<double>();
      }
    }
    return dense(std::move(A));
  }
  if (kind == "mask") {
    return mask(j.value("n", 0), j.value("kept", std::vector<int>{}));
  }
  if (kind == "circulant_blur") {
    auto k = j.value("kernel", std::vector<double>{});
    return circulant_blur(j.value("n", 0),
                          Eigen::Map<const Vec>(k.data(), k.size()));
  }
  fail(ErrorCode::config_error, "unknown operator kind: " + kind);
}

Pseudoinverse::Pseudoinverse(LinearOperator op, PinvSolver solver,
                             double ridge)
    : op_(std::move(op)), solver_(solver), ridge_(ridge) {
  if (const auto* e = op_.get_if<ExplicitOp>()) {
    if (solver_ == PinvSolver::direct) {
      require(op_.rows() <= 256 && op_.cols() <= 256,
              ErrorCode::invalid_argument,
              "direct pseudoinverse limited to 256x256; use CG");
      Eigen::JacobiSVD<Mat> svd(e->A,
                                Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto& sv = svd.singularValues();
      double cutoff = sv.size() ? sv(0) * 1e-12 : 0.0;
      Vec inv = Vec::Zero(sv.size());
      for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff) inv[i] = 1.0 / sv(i);
      }
      pinv_ = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
    }
  }
}

namespace {

// CG on (A^T A + ridge I) x = b.
Vec cg_normal(const LinearOperator& op, const Vec& b, double ridge) {
  auto normal_apply = [&](const Vec& x) {
    return Vec(op.adjoint(op.apply(x)) + ridge * x);
  };
  Vec x = Vec::Zero(op.cols());
  Vec r = b;
  Vec p = r;
  double rs = r.squaredNorm();
  double b2 = std::max(b.squaredNorm(), 1e-300);
  for (int it = 0; it < 4 * op.cols() + 32; ++it) {
    if (rs <= 1e-26 * b2) break;
    Vec ap = normal_apply(p);
    double alpha = rs / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    double rs_new = r.squaredNorm();
    p = r + (rs_new / rs) * p;
    rs = rs_new;
  }
  return x;
}

}  // namespace

Vec Pseudoinverse::apply(const Vec& u) const {
  require(u.size() == op_.rows(), ErrorCode::operator_mismatch,
          "pseudoinverse: wrong input size");
  if (op_.get_if<MaskOp>()) {
    // Rows are orthonormal, so the pseudoinverse is the adjoint.
    return op_.adjoint(u);
  }
  if (const auto* c = op_.get_if<CirculantBlurOp>()) {
    return blur_pinv(*c, u, ridge_, false);
  }
  if (solver_ == PinvSolver::direct) return pinv_ * u;
  return cg_normal(op_, op_.adjoint(u), ridge_);
}

Vec Pseudoinverse::apply_transpose(const Vec& x) const {
  require(x.size() == op_.cols(), ErrorCode::operator_mismatch,
          "pseudoinverse transpose: wrong input size");
  if (op_.get_if<MaskOp>()) {
    return op_.apply(x);
  }
  if (const auto* c = op_.get_if<CirculantBlurOp>()) {
    return blur_pinv(*c, x, ridge_, true);
  }
  if (solver_ == PinvSolver::direct) return pinv_.transpose() * x;
  // (A^+)^T = A (A^T A + ridge I)^{-1} in the regularized normal form.
  return op_.apply(cg_normal(op_, x, ridge_));
}

}  // namespace unsure
