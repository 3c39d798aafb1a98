#pragma once

#include <filesystem>

#include "burstsr/tensor.hpp"

namespace burstsr {

// .btf tensor files:
//
//   "BTF1" | u32 ndim | ndim x u32 dims | u32 dtype | payload
//
// All integers and the payload are little-endian. dtype 0 is float32, the
// only code currently defined. Dims of a Tensor3 are stored as (height,
// width, channels) and the payload uses the in-memory interleaved order.

template <typename Scalar>
Tensor3<Scalar> read_tensor(const std::filesystem::path& path);

/// Values are narrowed to float32; float tensors round-trip bit-exactly.
template <typename Scalar>
void write_tensor(const Tensor3<Scalar>& t, const std::filesystem::path& path);

/// Reads an 8- or 16-bit RGB PNG; samples are divided by the bit-depth maximum
/// and returned without any transfer-curve decoding.
Image read_srgb_png(const std::filesystem::path& path);

/// Writes already-encoded values in [0,1] (clamped) to an RGB PNG.
void write_png(const Image& encoded, const std::filesystem::path& path,
               int bit_depth = 8);

/// sRGB-encodes linear values, clamps to [0,1] and writes an RGB PNG.
void write_srgb_png(const Image& linear, const std::filesystem::path& path,
                    int bit_depth = 8);

}  // namespace burstsr
