#include "onionlens/infer/classify.hpp"

#include <cmath>

namespace onionlens::infer {
namespace {

const ModelMetadata& require_metadata(const ModelGraph& model) {
  if (!model.metadata()) throw MissingMetadata("class_order");
  return *model.metadata();
}

}  // namespace

Classification to_classification(std::span<const float> row, const std::array<Category, kCategoryCount>& order,
                                 bool is_probability) {
  if (row.size() != kCategoryCount) throw ShapeMismatch("output", "expected 5 scores per image");
  std::array<double, kCategoryCount> v{};
  for (std::size_t i = 0; i < kCategoryCount; ++i) v[i] = row[i];
  if (!is_probability) {
    double hi = v[0];
    for (double x : v) hi = std::max(hi, x);
    for (double& x : v) x = std::exp(x - hi);
  }
  CategoryScores raw;
  for (std::size_t i = 0; i < kCategoryCount; ++i) raw[order[i]] = std::max(0.0, v[i]);
  Classification c;
  c.scores = raw.normalize();
  c.top = c.scores.argmax();
  c.confidence = c.scores[c.top];
  return c;
}

Classification classify(const ModelGraph& model, const curation::DecodedImage& img) {
  const curation::DecodedImage* one[] = {&img};
  return classify_batch(model, one).front();
}

std::vector<Classification> classify_batch(const ModelGraph& model,
                                           std::span<const curation::DecodedImage* const> images) {
  const ModelMetadata& meta = require_metadata(model);
  std::vector<Classification> out;
  if (images.empty()) return out;
  std::vector<Tensor> items;
  items.reserve(images.size());
  for (const auto* img : images) items.push_back(preprocess(*img, meta.preproc));
  const Tensor probs = forward(model, stack_batch(items));
  out.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i)
    out.push_back(to_classification(probs.values().subspan(i * kCategoryCount, kCategoryCount), meta.class_order,
                                    model.ends_with_softmax()));
  return out;
}

}  // namespace onionlens::infer
