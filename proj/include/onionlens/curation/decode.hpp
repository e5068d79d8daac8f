#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "onionlens/curation/image.hpp"

namespace onionlens::curation {

inline constexpr int kDefaultMinSide = 64;

struct DecodeResult {
  DecodeStatus status;
  std::optional<DecodedImage> image;  // set iff status.ok
};

/// Decodes PNG, JPEG, GIF (first frame) and WebP into 1- or 3-channel
/// images. Alpha is dropped. Unusable inputs are reported in the status,
/// never thrown.
DecodeResult decode_and_validate(std::span<const std::uint8_t> bytes, int min_side = kDefaultMinSide);

/// Decode, validate and hash one downloaded record in place.
void curate(ImageRecord& record, int min_side = kDefaultMinSide);

/// First frame of a GIF87a/GIF89a stream composited onto the logical screen.
std::optional<DecodedImage> decode_gif(std::span<const std::uint8_t> bytes);

/// Encodes an 8-bit image as PNG (used by tooling and fixtures).
std::vector<std::uint8_t> encode_png(const DecodedImage& image);

}  // namespace onionlens::curation
