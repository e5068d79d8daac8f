#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>

#include <json.hpp>

#include "onionlens/domain/category.hpp"

namespace onionlens::fusion {

/// Rows are actual classes, columns predicted, both in canonical order.
class ConfusionMatrix {
 public:
  using Counts = std::array<std::array<std::int64_t, kCategoryCount>, kCategoryCount>;

  ConfusionMatrix() = default;
  /// Throws std::invalid_argument on a negative count.
  explicit ConfusionMatrix(const Counts& counts);

  void add(Category actual, Category predicted, std::int64_t n = 1);
  std::int64_t at(Category actual, Category predicted) const noexcept {
    return counts_[index_of(actual)][index_of(predicted)];
  }
  const Counts& counts() const noexcept { return counts_; }

  std::int64_t total() const noexcept;
  std::int64_t trace() const noexcept;
  std::int64_t row_sum(Category c) const noexcept;
  std::int64_t column_sum(Category c) const noexcept;

  // One-vs-rest cells for class c.
  std::int64_t tp(Category c) const noexcept { return at(c, c); }
  std::int64_t fp(Category c) const noexcept { return column_sum(c) - tp(c); }
  std::int64_t fn(Category c) const noexcept { return row_sum(c) - tp(c); }
  std::int64_t tn(Category c) const noexcept { return total() - tp(c) - fp(c) - fn(c); }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  Counts counts_{};
};

ConfusionMatrix confusion(std::span<const std::pair<Category, Category>> pairs);

/// num / den, or 0 flagged undefined when den == 0.
struct Ratio {
  std::int64_t numerator = 0;
  std::int64_t denominator = 0;
  double value = 0.0;
  bool defined = false;

  static Ratio of(std::int64_t num, std::int64_t den);
};

Ratio precision(const ConfusionMatrix& cm, Category c);  // TP / (TP + FP)
Ratio recall(const ConfusionMatrix& cm, Category c);     // TP / (TP + FN)
Ratio accuracy(const ConfusionMatrix& cm);               // trace / total

/// Binary form on scalar cells: (TP + TN) / (TP + TN + FP + FN).
Ratio binary_accuracy(std::int64_t tp, std::int64_t tn, std::int64_t fp, std::int64_t fn);

struct MacroAverage {
  double value = 0.0;
  int classes = 0;  // classes with a defined value; 0 means undefined
};

struct MetricsReport {
  ConfusionMatrix matrix;
  std::array<Ratio, kCategoryCount> precision{};
  std::array<Ratio, kCategoryCount> recall{};
  Ratio accuracy;
  MacroAverage macro_precision;
  MacroAverage macro_recall;
  std::int64_t total = 0;
};

/// Macro averages run over the classes whose value is defined.
MetricsReport evaluate(const ConfusionMatrix& cm);
nlohmann::json to_json(const MetricsReport& report);

}  // namespace onionlens::fusion
