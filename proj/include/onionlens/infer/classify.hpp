#pragma once

#include <span>
#include <vector>

#include "onionlens/curation/image.hpp"
#include "onionlens/domain/category.hpp"
#include "onionlens/infer/model.hpp"

namespace onionlens::infer {

struct Classification {
  CategoryScores scores;  // normalized, canonical order
  Category top = Category::drugs;
  double confidence = 0.0;
};

/// Maps one output row to canonical order. Rows from graphs without a final
/// Softmax are treated as logits.
Classification to_classification(std::span<const float> row, const std::array<Category, kCategoryCount>& order,
                                 bool is_probability);

/// preprocess -> forward -> argmax. Ties go to the lowest canonical index.
/// Throws MissingMetadata for graphs built without metadata.
Classification classify(const ModelGraph& model, const curation::DecodedImage& img);
std::vector<Classification> classify_batch(const ModelGraph& model,
                                           std::span<const curation::DecodedImage* const> images);

}  // namespace onionlens::infer
