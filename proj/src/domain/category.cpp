#include "onionlens/domain/category.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace onionlens {
namespace {

struct CategoryInfo {
  std::string_view id;
  std::string_view display;
  std::span<const std::string_view> aliases;
};

constexpr std::string_view kDrugAliases[] = {
    "drug", "drugs market", "drug market", "drug trading", "drug trafficking",
    "buying and selling drugs"};
constexpr std::string_view kWeaponAliases[] = {
    "weapon", "weapons market", "weapon trading", "weapon trafficking",
    "buying and selling weapons"};
constexpr std::string_view kCardAliases[] = {
    "bank card", "cards", "stolen bank cards", "bank card trafficking",
    "bank cards market", "buying and selling bank cards"};
constexpr std::string_view kIdentityAliases[] = {
    "passport", "passports", "identity document", "id", "ids", "fake id",
    "fake ids", "id cards", "identity document trafficking",
    "buying and selling identity documents"};
constexpr std::string_view kCurrencyAliases[] = {
    "illegal currency", "counterfeit currency", "counterfeit currencies",
    "counterfeit currency trafficking", "counterfeit money", "currency",
    "buying and selling illegal currencies"};

constexpr std::array<CategoryInfo, kCategoryCount> kInfo = {{
    {"drugs", "Drugs", kDrugAliases},
    {"weapons", "Weapons", kWeaponAliases},
    {"bank_cards", "Bank Cards", kCardAliases},
    {"identity_documents", "Identity Documents", kIdentityAliases},
    {"illegal_currencies", "Illegal Currencies", kCurrencyAliases},
}};

std::string fold_label(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || c == '_' || c == '-') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

}  // namespace

Category category_at(std::size_t index) {
  if (index >= kCategoryCount) {
    throw std::out_of_range("category index " + std::to_string(index));
  }
  return static_cast<Category>(index);
}

std::string_view canonical_id(Category c) noexcept { return kInfo[index_of(c)].id; }

std::string_view display_name(Category c) noexcept { return kInfo[index_of(c)].display; }

std::span<const std::string_view> aliases(Category c) noexcept {
  return kInfo[index_of(c)].aliases;
}

UnknownLabel::UnknownLabel(std::string label)
    : Error("unknown category label '" + label + "'"), label_(std::move(label)) {}

std::optional<Category> try_resolve_category(std::string_view label) noexcept {
  const std::string key = fold_label(label);
  if (key.empty()) return std::nullopt;
  for (Category c : kAllCategories) {
    const auto& info = kInfo[index_of(c)];
    if (key == fold_label(info.id) || key == fold_label(info.display)) return c;
    for (auto alias : info.aliases) {
      if (key == fold_label(alias)) return c;
    }
  }
  return std::nullopt;
}

Category resolve_category(std::string_view label) {
  if (auto c = try_resolve_category(label)) return *c;
  throw UnknownLabel(std::string(label));
}

double CategoryScores::total() const noexcept {
  return std::accumulate(scores.begin(), scores.end(), 0.0);
}

Category CategoryScores::argmax() const noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < kCategoryCount; ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return static_cast<Category>(best);
}

CategoryScores CategoryScores::normalize() const {
  CategoryScores out;
  out.normalized = true;
  const double sum = total();
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    out.scores[i] = sum > 0.0 ? scores[i] / sum : 1.0 / kCategoryCount;
  }
  return out;
}

void to_json(nlohmann::json& j, const CategoryScores& s) {
  j = nlohmann::json::array();
  for (double v : s.scores) j.push_back(v);
}

void from_json(const nlohmann::json& j, CategoryScores& s) {
  if (!j.is_array() || j.size() != kCategoryCount) {
    throw Error("category scores must be an array of 5 numbers");
  }
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    const double v = j[i].get<double>();
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("category score must be finite and >= 0");
    s.scores[i] = v;
  }
  s.normalized = std::abs(s.total() - 1.0) <= 1e-6;
}

}  // namespace onionlens
