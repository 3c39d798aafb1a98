#pragma once

#include <cmath>

#include "burstsr/tensor.hpp"

namespace burstsr {

/// IEC 61966-2-1 transfer: linear light -> encoded sRGB.
inline double srgb_encode(double linear) {
  if (linear <= 0.0031308) return 12.92 * linear;
  return 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

/// Encoded sRGB -> linear light.
inline double srgb_decode(double encoded) {
  if (encoded <= 0.04045) return encoded / 12.92;
  return std::pow((encoded + 0.055) / 1.055, 2.4);
}

template <typename Scalar>
Tensor3<Scalar> srgb_encode(Tensor3<Scalar> t) {
  for (Index i = 0; i < t.size(); ++i) {
    t.array()[i] = static_cast<Scalar>(srgb_encode(static_cast<double>(t.array()[i])));
  }
  return t;
}

template <typename Scalar>
Tensor3<Scalar> srgb_decode(Tensor3<Scalar> t) {
  for (Index i = 0; i < t.size(); ++i) {
    t.array()[i] = static_cast<Scalar>(srgb_decode(static_cast<double>(t.array()[i])));
  }
  return t;
}

}  // namespace burstsr
