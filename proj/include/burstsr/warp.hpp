#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <array>
#include <cmath>

#include "burstsr/error.hpp"

namespace burstsr {

/// Affine map from output to input coordinates ("pull" convention), in
/// continuous pixel units with the origin at the top-left image corner:
///
///   [u]   [a b] [x]   [tx]
///   [v] = [c d] [y] + [ty]
class AffineWarp {
 public:
  using Matrix = Eigen::Matrix<double, 2, 3, Eigen::RowMajor>;

  AffineWarp() : m_(identity_matrix()) {}
  explicit AffineWarp(const Matrix& m) : m_(m) {
    if (!m_.allFinite()) throw ParameterError("warp coefficients must be finite");
  }
  /// Row-major [a, b, tx, c, d, ty].
  static AffineWarp from_coefficients(const std::array<double, 6>& k) {
    Matrix m;
    m << k[0], k[1], k[2], k[3], k[4], k[5];
    return AffineWarp(m);
  }
  static AffineWarp identity() { return AffineWarp(); }
  static AffineWarp translation(double tx, double ty) {
    Matrix m;
    m << 1, 0, tx, 0, 1, ty;
    return AffineWarp(m);
  }
  /// Rotation by `radians` about (cx, cy) followed by a shift of (tx, ty).
  static AffineWarp euclidean(double radians, double tx, double ty, double cx,
                              double cy) {
    const double c = std::cos(radians), s = std::sin(radians);
    Matrix m;
    m << c, -s, cx - c * cx + s * cy + tx,  //
        s, c, cy - s * cx - c * cy + ty;
    return AffineWarp(m);
  }

  const Matrix& matrix() const { return m_; }
  std::array<double, 6> coefficients() const {
    return {m_(0, 0), m_(0, 1), m_(0, 2), m_(1, 0), m_(1, 1), m_(1, 2)};
  }

  Eigen::Vector2d apply(double x, double y) const {
    return {m_(0, 0) * x + m_(0, 1) * y + m_(0, 2),
            m_(1, 0) * x + m_(1, 1) * y + m_(1, 2)};
  }

  bool is_identity(double tol = 1e-12) const {
    return (m_ - identity_matrix()).cwiseAbs().maxCoeff() <= tol;
  }

  AffineWarp inverse() const {
    const Eigen::Matrix2d lin = m_.leftCols<2>();
    if (std::abs(lin.determinant()) < 1e-15) {
      throw ParameterError("warp is not invertible");
    }
    const Eigen::Matrix2d inv = lin.inverse();
    Matrix out;
    out.leftCols<2>() = inv;
    out.col(2) = -inv * m_.col(2);
    return AffineWarp(out);
  }

  /// (a * b)(p) = a(b(p)).
  friend AffineWarp operator*(const AffineWarp& a, const AffineWarp& b) {
    Matrix out;
    out.leftCols<2>() = a.m_.leftCols<2>() * b.m_.leftCols<2>();
    out.col(2) = a.m_.leftCols<2>() * b.m_.col(2) + a.m_.col(2);
    return AffineWarp(out);
  }

  /// Same motion expressed in a frame whose coordinates are `factor` times
  /// larger: the linear part is unchanged and the translation scales.
  AffineWarp rescaled(double factor) const {
    Matrix out = m_;
    out.col(2) *= factor;
    return AffineWarp(out);
  }

 private:
  static Matrix identity_matrix() {
    Matrix m;
    m << 1, 0, 0, 0, 1, 0;
    return m;
  }

  Matrix m_;
};

}  // namespace burstsr
