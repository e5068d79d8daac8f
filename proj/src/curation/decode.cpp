#include "onionlens/curation/decode.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "onionlens/curation/dhash.hpp"

namespace onionlens::curation {
namespace {

enum class Format { unknown, png, jpeg, gif, webp };

Format sniff(std::span<const std::uint8_t> b) {
  auto starts = [&](std::initializer_list<std::uint8_t> magic, std::size_t offset = 0) {
    if (b.size() < offset + magic.size()) return false;
    return std::equal(magic.begin(), magic.end(), b.begin() + static_cast<std::ptrdiff_t>(offset));
  };
  if (starts({0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A})) return Format::png;
  if (starts({0xFF, 0xD8, 0xFF})) return Format::jpeg;
  if (starts({'G', 'I', 'F', '8'})) return Format::gif;
  if (starts({'R', 'I', 'F', 'F'}) && starts({'W', 'E', 'B', 'P'}, 8)) return Format::webp;
  return Format::unknown;
}

// libjpeg only warns on a missing end-of-image marker and fills the rest
// with gray, so truncation has to be caught before decoding.
bool jpeg_complete(std::span<const std::uint8_t> b) {
  std::size_t end = b.size();
  while (end > 0 && (b[end - 1] == 0x00 || b[end - 1] == 0x0A || b[end - 1] == 0x0D)) --end;
  return end >= 4 && b[end - 2] == 0xFF && b[end - 1] == 0xD9;
}

std::optional<DecodedImage> decode_with_opencv(std::span<const std::uint8_t> bytes) {
  const cv::Mat buffer(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat mat;
  try {
    mat = cv::imdecode(buffer, cv::IMREAD_ANYCOLOR);
  } catch (const cv::Exception&) {
    return std::nullopt;
  }
  if (mat.empty() || mat.depth() != CV_8U) return std::nullopt;

  const int src_channels = mat.channels();
  if (src_channels != 1 && src_channels != 3 && src_channels != 4) {
    return DecodedImage(mat.cols, mat.rows, src_channels);
  }
  const int channels = src_channels == 1 ? 1 : 3;
  DecodedImage img(mat.cols, mat.rows, channels);
  for (int y = 0; y < mat.rows; ++y) {
    const std::uint8_t* src = mat.ptr<std::uint8_t>(y);
    std::uint8_t* dst = img.pixels.data() + static_cast<std::size_t>(y) * mat.cols * channels;
    for (int x = 0; x < mat.cols; ++x, src += src_channels, dst += channels) {
      if (channels == 1) {
        dst[0] = src[0];
      } else {  // BGR(A) -> RGB
        dst[0] = src[2];
        dst[1] = src[1];
        dst[2] = src[0];
      }
    }
  }
  return img;
}

}  // namespace

DecodedImage::DecodedImage(int w, int h, int c)
    : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, 0) {}

DecodedImage::DecodedImage(int w, int h, int c, std::vector<std::uint8_t> data)
    : width(w), height(h), channels(c), pixels(std::move(data)) {
  if (w < 1 || h < 1 || (c != 1 && c != 3) || pixels.size() != static_cast<std::size_t>(w) * h * c) {
    throw std::invalid_argument("DecodedImage: pixel buffer does not match dimensions");
  }
}

DecodeResult decode_and_validate(std::span<const std::uint8_t> bytes, int min_side) {
  std::optional<DecodedImage> img;
  switch (sniff(bytes)) {
    case Format::png:
    case Format::webp: img = decode_with_opencv(bytes); break;
    case Format::jpeg:
      if (jpeg_complete(bytes)) img = decode_with_opencv(bytes);
      break;
    case Format::gif: img = decode_gif(bytes); break;
    case Format::unknown: break;
  }
  if (!img) return {DecodeStatus::unusable("decode_failed"), std::nullopt};
  if (img->channels != 1 && img->channels != 3) {
    return {DecodeStatus::unusable("unsupported_channels"), std::nullopt};
  }
  if (std::min(img->width, img->height) < min_side) {
    return {DecodeStatus::unusable("too_small"), std::nullopt};
  }
  return {DecodeStatus::success(), std::move(img)};
}

void curate(ImageRecord& record, int min_side) {
  auto result = decode_and_validate(record.bytes, min_side);
  record.status = result.status;
  if (result.image) {
    record.dhash = dhash64(*result.image);
    record.image = std::move(result.image);
  } else {
    record.dhash.reset();
    record.image.reset();
  }
}

std::vector<std::uint8_t> encode_png(const DecodedImage& image) {
  cv::Mat bgr(image.height, image.width, image.channels == 1 ? CV_8UC1 : CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    std::uint8_t* dst = bgr.ptr<std::uint8_t>(y);
    for (int x = 0; x < image.width; ++x) {
      if (image.channels == 1) {
        dst[x] = image.at(x, y, 0);
      } else {
        dst[3 * x + 0] = image.at(x, y, 2);
        dst[3 * x + 1] = image.at(x, y, 1);
        dst[3 * x + 2] = image.at(x, y, 0);
      }
    }
  }
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", bgr, out)) throw std::runtime_error("PNG encoding failed");
  return out;
}

}  // namespace onionlens::curation
