#include "onionlens/fusion/metrics.hpp"

#include <stdexcept>

namespace onionlens::fusion {

ConfusionMatrix::ConfusionMatrix(const Counts& counts) : counts_(counts) {
  for (const auto& row : counts_)
    for (auto v : row)
      if (v < 0) throw std::invalid_argument("confusion counts must be non-negative");
}

void ConfusionMatrix::add(Category actual, Category predicted, std::int64_t n) {
  if (n < 0) throw std::invalid_argument("confusion counts must be non-negative");
  counts_[index_of(actual)][index_of(predicted)] += n;
}

std::int64_t ConfusionMatrix::total() const noexcept {
  std::int64_t t = 0;
  for (const auto& row : counts_)
    for (auto v : row) t += v;
  return t;
}

std::int64_t ConfusionMatrix::trace() const noexcept {
  std::int64_t t = 0;
  for (std::size_t i = 0; i < kCategoryCount; ++i) t += counts_[i][i];
  return t;
}

std::int64_t ConfusionMatrix::row_sum(Category c) const noexcept {
  std::int64_t t = 0;
  for (auto v : counts_[index_of(c)]) t += v;
  return t;
}

std::int64_t ConfusionMatrix::column_sum(Category c) const noexcept {
  std::int64_t t = 0;
  for (const auto& row : counts_) t += row[index_of(c)];
  return t;
}

ConfusionMatrix confusion(std::span<const std::pair<Category, Category>> pairs) {
  ConfusionMatrix cm;
  for (const auto& [actual, predicted] : pairs) cm.add(actual, predicted);
  return cm;
}

Ratio Ratio::of(std::int64_t num, std::int64_t den) {
  Ratio r{num, den, 0.0, den != 0};
  if (r.defined) r.value = static_cast<double>(num) / static_cast<double>(den);
  return r;
}

Ratio precision(const ConfusionMatrix& cm, Category c) { return Ratio::of(cm.tp(c), cm.tp(c) + cm.fp(c)); }
Ratio recall(const ConfusionMatrix& cm, Category c) { return Ratio::of(cm.tp(c), cm.tp(c) + cm.fn(c)); }
Ratio accuracy(const ConfusionMatrix& cm) { return Ratio::of(cm.trace(), cm.total()); }

Ratio binary_accuracy(std::int64_t tp, std::int64_t tn, std::int64_t fp, std::int64_t fn) {
  return Ratio::of(tp + tn, tp + tn + fp + fn);
}

MetricsReport evaluate(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.matrix = cm;
  r.total = cm.total();
  r.accuracy = accuracy(cm);
  double psum = 0.0, rsum = 0.0;
  for (Category c : kAllCategories) {
    const auto i = index_of(c);
    r.precision[i] = precision(cm, c);
    r.recall[i] = recall(cm, c);
    if (r.precision[i].defined) {
      psum += r.precision[i].value;
      ++r.macro_precision.classes;
    }
    if (r.recall[i].defined) {
      rsum += r.recall[i].value;
      ++r.macro_recall.classes;
    }
  }
  if (r.macro_precision.classes) r.macro_precision.value = psum / r.macro_precision.classes;
  if (r.macro_recall.classes) r.macro_recall.value = rsum / r.macro_recall.classes;
  return r;
}

namespace {

nlohmann::json ratio_json(const Ratio& r) {
  return {{"value", r.value}, {"defined", r.defined}, {"numerator", r.numerator}, {"denominator", r.denominator}};
}

}  // namespace

nlohmann::json to_json(const MetricsReport& report) {
  using nlohmann::json;
  json per_class = json::object();
  for (Category c : kAllCategories) {
    const auto i = index_of(c);
    per_class[std::string(canonical_id(c))] = {
        {"precision", ratio_json(report.precision[i])},
        {"recall", ratio_json(report.recall[i])},
        {"tp", report.matrix.tp(c)},
        {"fp", report.matrix.fp(c)},
        {"fn", report.matrix.fn(c)},
        {"tn", report.matrix.tn(c)},
    };
  }
  json labels = json::array();
  for (Category c : kAllCategories) labels.push_back(canonical_id(c));
  return {
      {"total", report.total},
      {"accuracy", ratio_json(report.accuracy)},
      {"macro_precision", {{"value", report.macro_precision.value}, {"classes", report.macro_precision.classes}}},
      {"macro_recall", {{"value", report.macro_recall.value}, {"classes", report.macro_recall.classes}}},
      {"per_class", per_class},
      {"confusion_matrix", {{"labels", labels}, {"rows", report.matrix.counts()}}},
  };
}

}  // namespace onionlens::fusion
