#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "onionlens/domain/category.hpp"
#include "onionlens/domain/config.hpp"
#include "onionlens/keywords/embedding.hpp"
#include "onionlens/keywords/text.hpp"

namespace onionlens::keywords {

using SeedTerms = std::array<std::vector<std::string>, kCategoryCount>;

class PrototypeError : public Error {
 public:
  using Error::Error;
};

const SeedTerms& default_seed_terms();
/// JSON object mapping category ids (aliases accepted) to arrays of seed
/// terms. Every category must be present.
SeedTerms parse_seed_terms(const nlohmann::json& j);
SeedTerms load_seed_terms(const std::filesystem::path& path);

/// One unit vector per category.
class CategoryPrototypes {
 public:
  CategoryPrototypes() = default;
  /// Rows must have equal, non-zero length; they are L2-normalized here.
  explicit CategoryPrototypes(std::array<std::vector<float>, kCategoryCount> vectors);

  std::span<const float> operator[](Category c) const { return vectors_[index_of(c)]; }
  std::size_t dimension() const noexcept { return vectors_[0].size(); }

 private:
  std::array<std::vector<float>, kCategoryCount> vectors_;
};

/// Each seed term is embedded with embed_term; the category prototype is the
/// normalized mean of its embeddable seeds. Throws PrototypeError when a
/// category has none.
CategoryPrototypes build_prototypes(const SeedTerms& seeds, const EmbeddingTable& table);

struct Assignment {
  std::optional<Category> category;
  double similarity = 0.0;  // best cosine, reported even when unassigned
};

/// argmax cosine over prototypes (lowest index on ties); unassigned below tau.
Assignment assign_category(std::span<const float> vector, const CategoryPrototypes& prototypes, double tau);

struct Keyword {
  std::string surface;
  double relevance = 0.0;  // cosine to the document vector
  std::optional<Category> assigned;
  double similarity = 0.0;  // cosine to the best prototype
  std::vector<float> vector;
};

/// Maximal marginal relevance selection of up to k embeddable candidates.
/// Ties go to the earlier candidate.
std::vector<Keyword> rank_keywords(std::span<const Candidate> candidates, const EmbeddingTable& table,
                                   std::span<const float> doc_vector, int k, double lambda);

struct NlpTitle {
  std::optional<Category> category;
  double confidence = 0.0;        // winner's share of the summed relevance of assigned keywords
  CategoryScores votes;           // summed relevance per category
  CategoryScores similarity_sums; // tie-break tally
};

/// Winner by summed relevance, then summed similarity, then lowest index.
NlpTitle nlp_title(std::span<const Keyword> keywords);

struct KeywordResources {
  const EmbeddingTable* table = nullptr;
  const CategoryPrototypes* prototypes = nullptr;
  const StopwordSet* stopwords = nullptr;
};

struct KeywordAnalysis {
  std::vector<Keyword> keywords;
  NlpTitle title;
};

/// candidates -> embed -> MMR rank -> assign -> vote.
KeywordAnalysis analyze_text(std::string_view text, const KeywordResources& res, const KeywordParams& params);

nlohmann::json keyword_to_json(const Keyword& kw);

}  // namespace onionlens::keywords
