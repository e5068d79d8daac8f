#pragma once

#include <array>
#include <span>
#include <string>

#include <json.hpp>

#include "onionlens/curation/image.hpp"
#include "onionlens/infer/tensor.hpp"

namespace onionlens::infer {

enum class ChannelOrder { rgb, bgr };

/// How an image becomes a network input. Travels inside the model file so
/// the exporter and this runtime cannot drift apart.
struct PreprocSpec {
  int height = 224;
  int width = 224;
  ChannelOrder channel_order = ChannelOrder::rgb;
  std::array<float, 3> mean{0.485f, 0.456f, 0.406f};
  std::array<float, 3> scale{0.229f, 0.224f, 0.225f};
  std::string resize = "bilinear";

  friend bool operator==(const PreprocSpec&, const PreprocSpec&) = default;
};

/// Keys: size (int or [h, w]), mean[3], scale[3], resize, channel_order.
/// size, mean and scale are required. Throws InvalidMetadata("preproc").
PreprocSpec parse_preproc(const nlohmann::json& j);
nlohmann::json preproc_to_json(const PreprocSpec& spec);

/// 1 x 3 x H x W tensor: bilinear resize (skipped at equal size), channel
/// reordering, then (x / 255 - mean) / scale. Gray images are replicated
/// across the three channels.
Tensor preprocess(const curation::DecodedImage& img, const PreprocSpec& spec);

/// Stacks equally shaped 1 x ... tensors into one batch.
Tensor stack_batch(std::span<const Tensor> items);

}  // namespace onionlens::infer
