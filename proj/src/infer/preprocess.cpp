#include "onionlens/infer/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "onionlens/curation/resize.hpp"
#include "onionlens/infer/errors.hpp"

namespace onionlens::infer {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& detail) { throw InvalidMetadata("preproc", detail); }

std::array<float, 3> triple(const json& j, const char* key) {
  if (!j.contains(key)) bad(std::string("missing ") + key);
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 3) bad(std::string(key) + " must be an array of 3 numbers");
  std::array<float, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!v[i].is_number()) bad(std::string(key) + " must be an array of 3 numbers");
    out[i] = v[i].get<float>();
  }
  return out;
}

std::string lower(std::string s) {
  std::ranges::transform(s, s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

PreprocSpec parse_preproc(const json& j) {
  if (!j.is_object()) bad("expected a JSON object");
  PreprocSpec spec;
  if (!j.contains("size")) bad("missing size");
  const json& size = j.at("size");
  if (size.is_number_integer()) {
    spec.height = spec.width = size.get<int>();
  } else if (size.is_array() && size.size() == 2 && size[0].is_number_integer() && size[1].is_number_integer()) {
    spec.height = size[0].get<int>();
    spec.width = size[1].get<int>();
  } else {
    bad("size must be an integer or [height, width]");
  }
  if (spec.height < 1 || spec.width < 1) bad("size must be positive");
  spec.mean = triple(j, "mean");
  spec.scale = triple(j, "scale");
  for (float s : spec.scale)
    if (!(s > 0.0f)) bad("scale entries must be positive");
  if (j.contains("resize")) {
    if (!j.at("resize").is_string()) bad("resize must be a string");
    spec.resize = lower(j.at("resize").get<std::string>());
    if (spec.resize != "bilinear") bad("unsupported resize method " + spec.resize);
  }
  if (j.contains("channel_order")) {
    if (!j.at("channel_order").is_string()) bad("channel_order must be a string");
    const auto order = lower(j.at("channel_order").get<std::string>());
    if (order == "rgb") spec.channel_order = ChannelOrder::rgb;
    else if (order == "bgr") spec.channel_order = ChannelOrder::bgr;
    else bad("unsupported channel_order " + order);
  }
  return spec;
}

json preproc_to_json(const PreprocSpec& spec) {
  return json{{"size", {spec.height, spec.width}},
              {"mean", spec.mean},
              {"scale", spec.scale},
              {"resize", spec.resize},
              {"channel_order", spec.channel_order == ChannelOrder::rgb ? "RGB" : "BGR"}};
}

Tensor preprocess(const curation::DecodedImage& img, const PreprocSpec& spec) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("preprocess: unsupported channel count " + std::to_string(img.channels));
  const std::size_t in_area = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  const std::size_t out_area = static_cast<std::size_t>(spec.width) * static_cast<std::size_t>(spec.height);
  const bool same_size = img.width == spec.width && img.height == spec.height;

  Tensor out({1, 3, spec.height, spec.width});
  std::vector<double> plane(in_area);
  for (int c = 0; c < 3; ++c) {
    // Network channel c reads image channel c (RGB) or 2 - c (BGR).
    const int src_c = img.channels == 1 ? 0 : (spec.channel_order == ChannelOrder::rgb ? c : 2 - c);
    for (std::size_t i = 0; i < in_area; ++i)
      plane[i] = img.pixels[i * static_cast<std::size_t>(img.channels) + static_cast<std::size_t>(src_c)];
    const std::vector<double> sized =
        same_size ? plane : curation::resize_bilinear(plane, img.width, img.height, spec.width, spec.height);
    const auto ci = static_cast<std::size_t>(c);
    float* dst = out.data() + ci * out_area;
    for (std::size_t i = 0; i < out_area; ++i)
      dst[i] = static_cast<float>((sized[i] / 255.0 - spec.mean[ci]) / spec.scale[ci]);
  }
  return out;
}

Tensor stack_batch(std::span<const Tensor> items) {
  if (items.empty()) throw std::invalid_argument("stack_batch: no items");
  const Shape& first = items.front().shape();
  if (first.empty() || first[0] != 1) throw std::invalid_argument("stack_batch: items must have batch size 1");
  Shape shape = first;
  shape[0] = static_cast<std::int64_t>(items.size());
  std::vector<float> data;
  data.reserve(items.front().size() * items.size());
  for (const Tensor& t : items) {
    if (t.shape() != first) throw std::invalid_argument("stack_batch: shape mismatch");
    data.insert(data.end(), t.values().begin(), t.values().end());
  }
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace onionlens::infer
