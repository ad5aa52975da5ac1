#pragma once

#include "unsure/models.hpp"

namespace unsure {

struct ExplicitOp {
  Mat A;
};

struct MaskOp {
  int n = 0;
  std::vector<int> kept;
};

// Circular convolution with a centered odd-length kernel, m = n.
struct CirculantBlurOp {
  int n = 0;
  Vec kernel;
};

class LinearOperator {
 public:
  using Variant = std::variant<ExplicitOp, MaskOp, CirculantBlurOp>;

  explicit LinearOperator(Variant v);

  static LinearOperator dense(Mat A);
  static LinearOperator mask(int n, std::vector<int> kept);
  static LinearOperator circulant_blur(int n, Vec kernel);
  static LinearOperator identity(int n);

  int rows() const { return m_; }
  int cols() const { return n_; }

  Vec apply(const Vec& x) const;
  Vec adjoint(const Vec& u) const;

  const Variant& variant() const { return v_; }
  template <class T>
  const T* get_if() const {
    return std::get_if<T>(&v_);
  }

  Json to_json() const;
  static LinearOperator from_json(const Json& j);

 private:
  Variant v_;
  int m_ = 0;
  int n_ = 0;
};

enum class PinvSolver { direct, conjugate_gradient };

class Pseudoinverse {
 public:
  explicit Pseudoinverse(LinearOperator op,
                         PinvSolver solver = PinvSolver::direct,
                         double ridge = 1e-8);

  const LinearOperator& op() const { return op_; }
  Vec apply(const Vec& u) const;            // x = A^+ u
  Vec apply_transpose(const Vec& x) const;  // (A^+)^T x, for loss gradients

 private:
  LinearOperator op_;
  PinvSolver solver_;
  double ridge_;
  Mat pinv_;  // direct explicit case
};

}  // namespace unsure
