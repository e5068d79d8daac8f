#include "onionlens/keywords/keywords.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace onionlens::keywords {
namespace {

using nlohmann::json;

std::vector<float> normalized(std::span<const float> v) {
  double norm = 0.0;
  for (float x : v) norm += static_cast<double>(x) * x;
  norm = std::sqrt(norm);
  std::vector<float> out(v.begin(), v.end());
  if (norm == 0.0) return out;
  for (float& x : out) x = static_cast<float>(x / norm);
  return out;
}

}  // namespace

const SeedTerms& default_seed_terms() {
  static const SeedTerms seeds = {{
      {"drug", "cannabis", "cocaine", "heroin", "pills"},
      {"gun", "pistol", "rifle", "ammo"},
      {"card", "visa", "cvv", "dumps"},
      {"passport", "id", "license", "citizenship"},
      {"counterfeit", "bills", "banknote", "currency"},
  }};
  return seeds;
}

SeedTerms parse_seed_terms(const json& j) {
  if (!j.is_object()) throw PrototypeError("prototype config must be a JSON object");
  SeedTerms seeds;
  std::array<bool, kCategoryCount> present{};
  for (const auto& [key, terms] : j.items()) {
    Category c;
    try {
      c = resolve_category(key);
    } catch (const UnknownLabel&) {
      throw PrototypeError("prototype config names unknown category '" + key + "'");
    }
    if (present[index_of(c)]) throw PrototypeError("category '" + key + "' listed twice");
    if (!terms.is_array() || terms.empty()) throw PrototypeError("seed terms for '" + key + "' must be a non-empty array");
    for (const auto& t : terms) {
      if (!t.is_string()) throw PrototypeError("seed terms for '" + key + "' must be strings");
      seeds[index_of(c)].push_back(t.get<std::string>());
    }
    present[index_of(c)] = true;
  }
  for (Category c : kAllCategories)
    if (!present[index_of(c)]) throw PrototypeError("prototype config lacks category " + std::string(canonical_id(c)));
  return seeds;
}

SeedTerms load_seed_terms(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PrototypeError("cannot open prototype config " + path.string());
  try {
    return parse_seed_terms(json::parse(in));
  } catch (const json::exception& e) {
    throw PrototypeError("prototype config " + path.string() + ": " + e.what());
  }
}

CategoryPrototypes::CategoryPrototypes(std::array<std::vector<float>, kCategoryCount> vectors) {
  const std::size_t dim = vectors[0].size();
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    if (vectors[i].size() != dim || dim == 0) throw PrototypeError("prototype vectors must share a non-zero dimension");
    vectors_[i] = normalized(vectors[i]);
    double norm = 0.0;
    for (float x : vectors_[i]) norm += static_cast<double>(x) * x;
    if (norm == 0.0) throw PrototypeError("prototype for " + std::string(canonical_id(category_at(i))) + " is zero");
  }
}

CategoryPrototypes build_prototypes(const SeedTerms& seeds, const EmbeddingTable& table) {
  std::array<std::vector<float>, kCategoryCount> vectors;
  for (Category c : kAllCategories) {
    std::vector<double> sum(table.dimension(), 0.0);
    std::size_t used = 0;
    for (const auto& term : seeds[index_of(c)]) {
      const TermVector v = embed_term(term, table);
      if (!v.embeddable) continue;
      ++used;
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v.values[i];
    }
    if (used == 0)
      throw PrototypeError("no seed term of " + std::string(canonical_id(c)) + " is in the embedding table");
    auto& out = vectors[index_of(c)];
    out.resize(sum.size());
    for (std::size_t i = 0; i < sum.size(); ++i) out[i] = static_cast<float>(sum[i] / static_cast<double>(used));
  }
  return CategoryPrototypes(std::move(vectors));
}

Assignment assign_category(std::span<const float> vector, const CategoryPrototypes& prototypes, double tau) {
  Assignment a;
  bool nonzero = false;
  for (float x : vector) nonzero = nonzero || x != 0.0f;
  if (!nonzero) return a;
  Category best = Category::drugs;
  double best_sim = -std::numeric_limits<double>::infinity();
  for (Category c : kAllCategories) {
    const double s = cosine(vector, prototypes[c]);
    if (s > best_sim) {
      best_sim = s;
      best = c;
    }
  }
  a.similarity = best_sim;
  if (best_sim >= tau) a.category = best;
  return a;
}

std::vector<Keyword> rank_keywords(std::span<const Candidate> candidates, const EmbeddingTable& table,
                                   std::span<const float> doc_vector, int k, double lambda) {
  std::vector<Keyword> pool;
  for (const auto& c : candidates) {
    TermVector v = embed_tokens(c.tokens, table);
    if (!v.embeddable) continue;
    Keyword kw;
    kw.surface = c.surface;
    kw.relevance = doc_vector.size() == v.values.size() ? cosine(v.values, doc_vector) : 0.0;
    kw.vector = std::move(v.values);
    pool.push_back(std::move(kw));
  }

  std::vector<Keyword> selected;
  std::vector<bool> taken(pool.size(), false);
  const std::size_t want = static_cast<std::size_t>(std::max(0, k));
  while (selected.size() < want && selected.size() < pool.size()) {
    std::size_t pick = pool.size();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (taken[i]) continue;
      double score = pool[i].relevance;
      if (!selected.empty()) {
        double redundancy = -std::numeric_limits<double>::infinity();
        for (const auto& s : selected) redundancy = std::max(redundancy, cosine(pool[i].vector, s.vector));
        score = lambda * pool[i].relevance - (1.0 - lambda) * redundancy;
      }
      if (score > best) {
        best = score;
        pick = i;
      }
    }
    taken[pick] = true;
    selected.push_back(pool[pick]);
  }
  return selected;
}

NlpTitle nlp_title(std::span<const Keyword> keywords) {
  NlpTitle t;
  std::array<bool, kCategoryCount> voted{};
  for (const auto& kw : keywords) {
    if (!kw.assigned) continue;
    voted[index_of(*kw.assigned)] = true;
    t.votes[*kw.assigned] += kw.relevance;
    t.similarity_sums[*kw.assigned] += kw.similarity;
  }
  std::optional<Category> winner;
  for (Category c : kAllCategories) {
    if (!voted[index_of(c)]) continue;
    if (!winner || t.votes[c] > t.votes[*winner] ||
        (t.votes[c] == t.votes[*winner] && t.similarity_sums[c] > t.similarity_sums[*winner]))
      winner = c;
  }
  if (!winner) return t;
  t.category = winner;
  double mass = 0.0;
  for (Category c : kAllCategories) mass += std::max(0.0, t.votes[c]);
  t.confidence = mass > 0.0 ? std::max(0.0, t.votes[*winner]) / mass : 0.0;
  return t;
}

KeywordAnalysis analyze_text(std::string_view text, const KeywordResources& res, const KeywordParams& params) {
  const StopwordSet& stop = res.stopwords ? *res.stopwords : default_stopwords();
  const auto candidates = extract_candidates(text, stop, params.ngram_max);
  const auto doc = embed_doc(content_tokens(text, stop), *res.table);
  KeywordAnalysis out;
  out.keywords = rank_keywords(candidates, *res.table, doc.values, params.k, params.mmr_lambda);
  for (auto& kw : out.keywords) {
    const Assignment a = assign_category(kw.vector, *res.prototypes, params.min_similarity);
    kw.assigned = a.category;
    kw.similarity = a.similarity;
  }
  out.title = nlp_title(out.keywords);
  return out;
}

json keyword_to_json(const Keyword& kw) {
  return json{{"term", kw.surface},
              {"relevance", kw.relevance},
              {"category", kw.assigned ? json(canonical_id(*kw.assigned)) : json(nullptr)},
              {"similarity", kw.similarity}};
}

}  // namespace onionlens::keywords
