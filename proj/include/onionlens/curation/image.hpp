#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "onionlens/domain/category.hpp"

namespace onionlens::curation {

/// Row-major 8-bit samples, interleaved channels (1 = gray, 3 = RGB).
struct DecodedImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  DecodedImage() = default;
  DecodedImage(int w, int h, int c);
  DecodedImage(int w, int h, int c, std::vector<std::uint8_t> data);

  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

struct DecodeStatus {
  bool ok = false;
  std::string reason;  // "decode_failed", "too_small", "unsupported_channels"; empty when ok

  static DecodeStatus success() { return {true, {}}; }
  static DecodeStatus unusable(std::string why) { return {false, std::move(why)}; }
};

/// One downloaded image as it moves through curation. dhash is present
/// exactly when status.ok.
struct ImageRecord {
  std::string source_url;
  std::string content_type;
  std::vector<std::uint8_t> bytes;
  std::optional<DecodeStatus> status;  // unset until decode_and_validate ran
  std::optional<std::uint64_t> dhash;
  std::optional<DecodedImage> image;
  std::optional<Category> label;
  bool kept = false;

  bool decoded() const noexcept { return status && status->ok; }
};

}  // namespace onionlens::curation
