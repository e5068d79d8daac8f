#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "onionlens/error.hpp"

namespace onionlens {

/// The closed five-way activity taxonomy. The enumerator order is the
/// canonical index order used by model outputs, votes and reports.
enum class Category : std::uint8_t {
  drugs = 0,
  weapons = 1,
  bank_cards = 2,
  identity_documents = 3,
  illegal_currencies = 4,
};

inline constexpr std::size_t kCategoryCount = 5;

inline constexpr std::array<Category, kCategoryCount> kAllCategories = {
    Category::drugs, Category::weapons, Category::bank_cards,
    Category::identity_documents, Category::illegal_currencies};

constexpr std::size_t index_of(Category c) noexcept {
  return static_cast<std::size_t>(c);
}

Category category_at(std::size_t index);

std::string_view canonical_id(Category c) noexcept;
std::string_view display_name(Category c) noexcept;
std::span<const std::string_view> aliases(Category c) noexcept;

class UnknownLabel : public Error {
 public:
  explicit UnknownLabel(std::string label);
  const std::string& label() const noexcept { return label_; }

 private:
  std::string label_;
};

/// Case-insensitive lookup over canonical ids, display names and aliases.
/// Underscores, hyphens and runs of whitespace compare equal to one space.
Category resolve_category(std::string_view label);
std::optional<Category> try_resolve_category(std::string_view label) noexcept;

/// Five non-negative scores in canonical order.
struct CategoryScores {
  std::array<double, kCategoryCount> scores{};
  bool normalized = false;

  double operator[](Category c) const noexcept { return scores[index_of(c)]; }
  double& operator[](Category c) noexcept { return scores[index_of(c)]; }

  double total() const noexcept;
  /// Lowest canonical index wins ties.
  Category argmax() const noexcept;
  /// Divides by the total; an all-zero vector becomes uniform.
  CategoryScores normalize() const;
};

void to_json(nlohmann::json& j, const CategoryScores& s);
void from_json(const nlohmann::json& j, CategoryScores& s);

}  // namespace onionlens
