#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "burstsr/error.hpp"

namespace burstsr {

using Index = Eigen::Index;

struct Shape {
  Index height = 0;
  Index width = 0;
  Index channels = 0;

  Index size() const { return height * width * channels; }
  bool operator==(const Shape&) const = default;
};

inline std::string to_string(const Shape& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
         std::to_string(s.channels);
}

/// Dense height x width x channels image. Storage is row-major with the
/// channels interleaved, so element (y, x, c) lives at (y * width + x) *
/// channels + c. Pixel (x, y) covers the continuous square [x, x+1) x [y, y+1)
/// and its center sits at (x + 0.5, y + 0.5).
template <typename Scalar>
class Tensor3 {
 public:
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Tensor3() = default;

  Tensor3(Index height, Index width, Index channels)
      : shape_{height, width, channels}, data_(Storage::Zero(shape_.size())) {
    check_dims();
  }

  explicit Tensor3(const Shape& shape)
      : Tensor3(shape.height, shape.width, shape.channels) {}

  Tensor3(const Shape& shape, Storage data)
      : shape_(shape), data_(std::move(data)) {
    check_dims();
    if (data_.size() != shape_.size()) {
      throw DimensionError("tensor payload holds " +
                           std::to_string(data_.size()) + " values, shape " +
                           to_string(shape_) + " needs " +
                           std::to_string(shape_.size()));
    }
  }

  static Tensor3 constant(Index height, Index width, Index channels,
                          Scalar value) {
    Tensor3 t(height, width, channels);
    t.data_.setConstant(value);
    return t;
  }

  Index height() const { return shape_.height; }
  Index width() const { return shape_.width; }
  Index channels() const { return shape_.channels; }
  Index size() const { return data_.size(); }
  const Shape& shape() const { return shape_; }

  Scalar& operator()(Index y, Index x, Index c) {
    return data_[(y * shape_.width + x) * shape_.channels + c];
  }
  const Scalar& operator()(Index y, Index x, Index c) const {
    return data_[(y * shape_.width + x) * shape_.channels + c];
  }

  Storage& array() { return data_; }
  const Storage& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  template <typename Other>
  Tensor3<Other> cast() const {
    return Tensor3<Other>(shape_, data_.template cast<Other>());
  }

  bool all_finite() const { return data_.allFinite(); }

  /// Single channel `c` as a height x width x 1 tensor.
  Tensor3 channel(Index c) const {
    Tensor3 out(shape_.height, shape_.width, 1);
    for (Index p = 0; p < shape_.height * shape_.width; ++p) {
      out.data_[p] = data_[p * shape_.channels + c];
    }
    return out;
  }

  void set_channel(Index c, const Tensor3& plane) {
    for (Index p = 0; p < shape_.height * shape_.width; ++p) {
      data_[p * shape_.channels + c] = plane.data_[p];
    }
  }

  Tensor3& operator+=(const Tensor3& o) {
    require_same_shape(o);
    data_ += o.data_;
    return *this;
  }
  Tensor3& operator-=(const Tensor3& o) {
    require_same_shape(o);
    data_ -= o.data_;
    return *this;
  }
  Tensor3& operator*=(Scalar s) {
    data_ *= s;
    return *this;
  }

  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
  friend Tensor3 operator*(Tensor3 a, Scalar s) { return a *= s; }
  friend Tensor3 operator*(Scalar s, Tensor3 a) { return a *= s; }

  void require_same_shape(const Tensor3& o) const {
    if (!(shape_ == o.shape_)) {
      throw DimensionError("shape mismatch: " + to_string(shape_) + " vs " +
                           to_string(o.shape_));
    }
  }

 private:
  void check_dims() const {
    if (shape_.height < 0 || shape_.width < 0 || shape_.channels < 0) {
      throw DimensionError("negative tensor dimension");
    }
  }

  Shape shape_;
  Storage data_;
};

using Image = Tensor3<double>;

template <typename Scalar>
double dot(const Tensor3<Scalar>& a, const Tensor3<Scalar>& b) {
  a.require_same_shape(b);
  return (a.array().template cast<double>() * b.array().template cast<double>())
      .sum();
}

template <typename Scalar>
double squared_norm(const Tensor3<Scalar>& a) {
  return a.array().template cast<double>().square().sum();
}

template <typename Scalar>
double norm(const Tensor3<Scalar>& a) {
  return std::sqrt(squared_norm(a));
}

template <typename Scalar>
Tensor3<Scalar> clamp(Tensor3<Scalar> t, Scalar lo, Scalar hi) {
  t.array() = t.array().max(lo).min(hi);
  return t;
}

/// One RGGB-packed raw frame: four half-resolution planes ordered
/// [R, G_r, G_b, B], one per site of the 2x2 Bayer block.
template <typename Scalar>
class PackedRaw {
 public:
  static constexpr Index kChannels = 4;

  PackedRaw() : planes_(0, 0, kChannels) {}
  PackedRaw(Index height, Index width) : planes_(height, width, kChannels) {}
  explicit PackedRaw(Tensor3<Scalar> planes) : planes_(std::move(planes)) {
    if (planes_.channels() != kChannels) {
      throw DimensionError("packed raw frame needs 4 channels, got " +
                           std::to_string(planes_.channels()));
    }
  }

  Index height() const { return planes_.height(); }
  Index width() const { return planes_.width(); }
  const Tensor3<Scalar>& planes() const { return planes_; }
  Tensor3<Scalar>& planes() { return planes_; }

 private:
  Tensor3<Scalar> planes_;
};

using RawFrame = PackedRaw<double>;

/// B packed frames of one scene, all the same size. Frame `reference_index`
/// is the registration base.
template <typename Scalar>
class BasicBurst {
 public:
  BasicBurst() = default;
  explicit BasicBurst(std::vector<PackedRaw<Scalar>> frames,
                      std::size_t reference_index = 0)
      : frames_(std::move(frames)), reference_index_(reference_index) {
    if (frames_.empty()) throw ArgumentError("burst needs at least one frame");
    if (reference_index_ >= frames_.size()) {
      throw ArgumentError("burst reference index out of range");
    }
    for (const auto& f : frames_) {
      if (f.height() != frames_.front().height() ||
          f.width() != frames_.front().width()) {
        throw DimensionError("burst frames differ in size");
      }
    }
  }

  std::size_t size() const { return frames_.size(); }
  std::size_t reference_index() const { return reference_index_; }
  const std::vector<PackedRaw<Scalar>>& frames() const { return frames_; }
  const PackedRaw<Scalar>& frame(std::size_t i) const { return frames_.at(i); }
  const PackedRaw<Scalar>& reference() const { return frames_[reference_index_]; }
  Index frame_height() const { return frames_.front().height(); }
  Index frame_width() const { return frames_.front().width(); }

 private:
  std::vector<PackedRaw<Scalar>> frames_;
  std::size_t reference_index_ = 0;
};

using Burst = BasicBurst<double>;

}  // namespace burstsr
