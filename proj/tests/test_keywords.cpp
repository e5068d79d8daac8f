#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "onionlens/keywords/embedding.hpp"
#include "onionlens/keywords/keywords.hpp"
#include "onionlens/keywords/text.hpp"
#include "support/support.hpp"

using namespace onionlens;
using namespace onionlens::keywords;

namespace {

std::vector<float> basis(std::size_t dim, std::size_t i, float scale = 1.0f) {
  std::vector<float> v(dim, 0.0f);
  v[i] = scale;
  return v;
}

CategoryPrototypes orthonormal_prototypes(std::size_t dim = 8) {
  std::array<std::vector<float>, kCategoryCount> v;
  for (std::size_t i = 0; i < kCategoryCount; ++i) v[i] = basis(dim, i);
  return CategoryPrototypes(v);
}

std::vector<std::string> surfaces(const std::vector<Candidate>& cs) {
  std::vector<std::string> out;
  for (const auto& c : cs) out.push_back(c.surface);
  return out;
}

Keyword kw(std::optional<Category> c, double relevance, double similarity = 0.5) {
  Keyword k;
  k.surface = "k" + std::to_string(relevance);
  k.assigned = c;
  k.relevance = relevance;
  k.similarity = similarity;
  return k;
}

}  // namespace

TEST(Text, Tokenize) {
  EXPECT_EQ(tokenize("Buy 100 COCAINE, now!! x2"), (std::vector<std::string>{"buy", "cocaine", "now", "x2"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("... 42 !!").empty());
}

TEST(Text, CandidatesExample) {
  const auto cs = extract_candidates("Buy the best cocaine online", default_stopwords(), 2);
  const auto list = surfaces(cs);
  const std::set<std::string> got(list.begin(), list.end());
  EXPECT_EQ(got, (std::set<std::string>{"buy", "cocaine", "buy cocaine"}));
  EXPECT_EQ(cs.size(), 3u);
}

TEST(Text, CandidatesEmptyCases) {
  EXPECT_TRUE(extract_candidates("", default_stopwords(), 2).empty());
  EXPECT_TRUE(extract_candidates("the the the", default_stopwords(), 2).empty());
}

TEST(Text, CandidatesUniqueInDocumentOrder) {
  const auto cs = extract_candidates("pistol ammo pistol ammo rifle", default_stopwords(), 2);
  EXPECT_EQ(surfaces(cs), (std::vector<std::string>{"pistol", "pistol ammo", "ammo", "ammo pistol", "ammo rifle",
                                                    "rifle"}));
  const auto uni = extract_candidates("pistol ammo pistol", default_stopwords(), 1);
  EXPECT_EQ(surfaces(uni), (std::vector<std::string>{"pistol", "ammo"}));
}

TEST(Text, StopwordMonotonicity) {
  const std::string text = "Fresh cannabis and pure cocaine shipped with stealth, the best vendor for pills";
  StopwordSet stop = default_stopwords();
  auto before = surfaces(extract_candidates(text, stop, 2));
  for (const char* extra : {"fresh", "pure", "stealth", "vendor", "pills", "cocaine"}) {
    stop.insert(extra);
    const auto after = surfaces(extract_candidates(text, stop, 2));
    EXPECT_LE(after.size(), before.size()) << extra;
    const std::set<std::string> before_set(before.begin(), before.end());
    for (const auto& s : after)
      if (s.find(' ') == std::string::npos) EXPECT_TRUE(before_set.contains(s)) << s;
    before = after;
  }
}

TEST(Text, LoadStopwords) {
  test::TempDir dir;
  test::write_text(dir / "stop.txt", "# comment\nFoo\n\n  bar  \n");
  const auto s = load_stopwords(dir / "stop.txt");
  EXPECT_EQ(s, (StopwordSet{"foo", "bar"}));
}

TEST(Embedding, ParseAndLookup) {
  std::istringstream in("Cat 1 0 0\ndog 0 1 0\ncat 5 5 5\n");
  const auto t = parse_embeddings(in);
  EXPECT_EQ(t.dimension(), 3u);
  EXPECT_EQ(t.size(), 2u);
  ASSERT_TRUE(t.contains("CAT"));
  EXPECT_EQ(std::vector<float>(t.lookup("cat")->begin(), t.lookup("cat")->end()), (std::vector<float>{1, 0, 0}));
  EXPECT_FALSE(t.lookup("bird"));
}

TEST(Embedding, RaggedRejected) {
  std::istringstream ragged("a 1 2 3\nb 1 2\n");
  try {
    parse_embeddings(ragged);
    FAIL() << "expected EmbeddingFormatError";
  } catch (const EmbeddingFormatError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream bad("a 1 x 3\n");
  EXPECT_THROW(parse_embeddings(bad), EmbeddingFormatError);
}

TEST(Embedding, FixtureFileLoads) {
  const auto t = load_embeddings(test::fixture("embeddings.txt"));
  EXPECT_EQ(t.dimension(), 16u);
  EXPECT_TRUE(t.contains("cocaine"));
}

TEST(Embedding, TermVectors) {
  EmbeddingTable t(2);
  t.insert("a", std::vector<float>{1, 0});
  t.insert("b", std::vector<float>{0, 1});
  t.insert("c", std::vector<float>{3, 4});
  t.insert("neg", std::vector<float>{-3, -4});

  const auto single = embed_term("c", t);
  ASSERT_TRUE(single.embeddable);
  EXPECT_NEAR(single.values[0], 0.6, 1e-6);
  EXPECT_NEAR(single.values[1], 0.8, 1e-6);

  const auto bigram = embed_term("a b", t);
  EXPECT_NEAR(bigram.values[0], 0.70710678, 1e-6);
  EXPECT_NEAR(bigram.values[1], 0.70710678, 1e-6);

  EXPECT_FALSE(embed_term("c neg", t).embeddable);
  EXPECT_FALSE(embed_term("zzz", t).embeddable);
  const auto partial = embed_term("zzz a", t);
  EXPECT_TRUE(partial.embeddable);
  EXPECT_NEAR(partial.values[0], 1.0, 1e-6);
}

TEST(Prototypes, MeanThenNormalize) {
  EmbeddingTable t(3);
  t.insert("x", std::vector<float>{1, 0, 0});
  t.insert("y", std::vector<float>{0, 1, 0});
  t.insert("z", std::vector<float>{0, 0, 1});
  SeedTerms seeds;
  seeds[0] = {"x", "y"};
  for (std::size_t i = 1; i < kCategoryCount; ++i) seeds[i] = {"z", "missing"};
  const auto p = build_prototypes(seeds, t);
  EXPECT_NEAR(p[Category::drugs][0], 0.7071, 1e-4);
  EXPECT_NEAR(p[Category::drugs][1], 0.7071, 1e-4);
  EXPECT_NEAR(p[Category::drugs][2], 0.0, 1e-7);
  for (Category c : kAllCategories) {
    double n = 0;
    for (float v : p[c]) n += static_cast<double>(v) * v;
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-6);
  }
  seeds[3] = {"zzzz"};
  EXPECT_THROW(build_prototypes(seeds, t), PrototypeError);
}

TEST(Prototypes, SeedConfig) {
  const auto shipped = load_seed_terms(test::data_file("seed_terms.json"));
  EXPECT_EQ(shipped, default_seed_terms());
  EXPECT_EQ(default_seed_terms()[index_of(Category::weapons)],
            (std::vector<std::string>{"gun", "pistol", "rifle", "ammo"}));
  auto j = nlohmann::json::parse(test::read_text(test::data_file("seed_terms.json")));
  j["Passport"] = j["identity_documents"];
  j.erase("identity_documents");
  EXPECT_EQ(parse_seed_terms(j), default_seed_terms());
  j.erase("drugs");
  EXPECT_THROW(parse_seed_terms(j), PrototypeError);
  EXPECT_THROW(parse_seed_terms(nlohmann::json::parse(R"({"fish": ["x"]})")), PrototypeError);
}

TEST(Assign, OrthonormalExamples) {
  const auto protos = orthonormal_prototypes();
  const auto identity = assign_category(basis(8, 0), protos, 0.15);
  EXPECT_EQ(identity.category, Category::drugs);
  EXPECT_DOUBLE_EQ(identity.similarity, 1.0);

  EXPECT_FALSE(assign_category(basis(8, 6), protos, 0.15).category);

  std::vector<float> mix(8, 0.0f);
  mix[1] = 0.8f;
  mix[0] = 0.2f;
  const auto a = assign_category(mix, protos, 0.15);
  EXPECT_EQ(a.category, Category::weapons);
  EXPECT_NEAR(a.similarity, 0.8 / std::sqrt(0.68), 1e-6);

  std::vector<float> tie(8, 0.0f);
  tie[2] = tie[4] = 1.0f;
  EXPECT_EQ(assign_category(tie, protos, 0.15).category, Category::bank_cards);
  EXPECT_FALSE(assign_category(std::vector<float>(8, 0.0f), protos, -1.0).category);
}

TEST(Assign, ThresholdBoundary) {
  const auto protos = orthonormal_prototypes(2 + kCategoryCount);
  std::vector<float> v(7, 0.0f);
  v[0] = 0.6f;
  v[6] = 0.8f;  // cosine 0.6 to drugs
  EXPECT_EQ(assign_category(v, protos, 0.59).category, Category::drugs);
  EXPECT_FALSE(assign_category(v, protos, 0.61).category);
}

TEST(Assign, ScaleInvariance) {
  std::mt19937 rng(2718);
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::uniform_real_distribution<float> alpha(0.01f, 100.0f);
  std::array<std::vector<float>, kCategoryCount> pv;
  for (auto& p : pv) {
    p.resize(12);
    for (auto& x : p) x = n(rng);
  }
  const CategoryPrototypes protos(pv);
  for (int i = 0; i < 1000; ++i) {
    std::vector<float> v(12);
    for (auto& x : v) x = n(rng);
    auto scaled = v;
    const float a = alpha(rng);
    for (auto& x : scaled) x *= a;
    const auto base = assign_category(v, protos, 0.15);
    const auto s = assign_category(scaled, protos, 0.15);
    ASSERT_EQ(base.category, s.category) << i;
    ASSERT_NEAR(base.similarity, s.similarity, 1e-6);
  }
}

TEST(Rank, LambdaOneIsCosineRanking) {
  std::mt19937 rng(5);
  std::normal_distribution<float> n(0.0f, 1.0f);
  EmbeddingTable t(6);
  std::vector<Candidate> cands;
  for (int i = 0; i < 25; ++i) {
    std::vector<float> v(6);
    for (auto& x : v) x = n(rng);
    const std::string tok = "w" + std::to_string(i);
    t.insert(tok, v);
    cands.push_back({tok, {tok}, static_cast<std::size_t>(i)});
  }
  std::vector<float> doc(6);
  for (auto& x : doc) x = n(rng);
  const auto ranked = rank_keywords(cands, t, doc, 25, 1.0);
  ASSERT_EQ(ranked.size(), 25u);
  std::vector<std::pair<double, int>> oracle;
  for (int i = 0; i < 25; ++i) {
    const auto v = t.lookup("w" + std::to_string(i));
    double dot = 0, na = 0, nb = 0;
    for (std::size_t d = 0; d < 6; ++d) {
      dot += static_cast<double>((*v)[d]) * doc[d];
      na += static_cast<double>((*v)[d]) * (*v)[d];
      nb += static_cast<double>(doc[d]) * doc[d];
    }
    oracle.emplace_back(-dot / std::sqrt(na * nb), i);
  }
  std::sort(oracle.begin(), oracle.end());
  for (std::size_t i = 0; i < 25; ++i) EXPECT_EQ(ranked[i].surface, "w" + std::to_string(oracle[i].second));
  for (std::size_t i = 1; i < ranked.size(); ++i) EXPECT_GE(ranked[i - 1].relevance, ranked[i].relevance);
}

TEST(Rank, MmrPrefersDiversity) {
  EmbeddingTable t(3);
  t.insert("a", std::vector<float>{1.0f, 0.0f, 0.2f});
  t.insert("b", std::vector<float>{1.0f, 0.02f, 0.2f});
  t.insert("c", std::vector<float>{0.0f, 1.0f, 0.2f});
  const std::vector<Candidate> cands = {{"a", {"a"}, 0}, {"b", {"b"}, 1}, {"c", {"c"}, 2}};
  const std::vector<float> doc = {0.7f, 0.5f, 0.1f};
  const auto got = rank_keywords(cands, t, doc, 2, 0.5);
  ASSERT_EQ(got.size(), 2u);

  // Brute force over every ordered pair: the first pick maximizes relevance,
  // the second maximizes the MMR objective given the first.
  auto vec = [&](const std::string& s) {
    const auto v = embed_term(s, t);
    return v.values;
  };
  std::string best_first;
  double best_rel = -2;
  for (const auto& c : cands) {
    const double r = cosine(vec(c.surface), doc);
    if (r > best_rel) best_rel = r, best_first = c.surface;
  }
  std::string best_second;
  double best_score = -10;
  for (const auto& c : cands) {
    if (c.surface == best_first) continue;
    const double s = 0.5 * cosine(vec(c.surface), doc) - 0.5 * cosine(vec(c.surface), vec(best_first));
    if (s > best_score) best_score = s, best_second = c.surface;
  }
  EXPECT_EQ(got[0].surface, best_first);
  EXPECT_EQ(got[1].surface, best_second);
  const std::set<std::string> picked = {got[0].surface, got[1].surface};
  EXPECT_TRUE(picked.contains("c"));
  EXPECT_TRUE(picked.contains("a") != picked.contains("b"));
}

TEST(Rank, KLargerThanCandidates) {
  EmbeddingTable t(2);
  t.insert("a", std::vector<float>{1, 0});
  t.insert("b", std::vector<float>{0, 1});
  const std::vector<Candidate> cands = {{"a", {"a"}, 0}, {"b", {"b"}, 1}, {"oov", {"oov"}, 2}};
  const auto got = rank_keywords(cands, t, std::vector<float>{0.6f, 0.8f}, 10, 0.5);
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0].surface, "b");
}

TEST(NlpTitle, Examples) {
  const std::vector<Keyword> mixed = {kw(Category::drugs, 0.9), kw(Category::drugs, 0.8), kw(Category::drugs, 0.7),
                                      kw(Category::weapons, 0.95)};
  const auto t = nlp_title(mixed);
  EXPECT_EQ(t.category, Category::drugs);
  EXPECT_NEAR(t.votes[Category::drugs], 2.4, 1e-12);
  EXPECT_NEAR(t.confidence, 2.4 / 3.35, 1e-12);

  EXPECT_FALSE(nlp_title(std::vector<Keyword>{}).category);
  EXPECT_FALSE(nlp_title(std::vector<Keyword>{kw(std::nullopt, 0.9)}).category);
  const auto single = nlp_title(std::vector<Keyword>{kw(Category::weapons, 0.4)});
  EXPECT_EQ(single.category, Category::weapons);
  EXPECT_DOUBLE_EQ(single.confidence, 1.0);
}

TEST(NlpTitle, TieBreaks) {
  const auto by_similarity =
      nlp_title(std::vector<Keyword>{kw(Category::drugs, 0.5, 0.3), kw(Category::weapons, 0.5, 0.9)});
  EXPECT_EQ(by_similarity.category, Category::weapons);
  const auto by_index =
      nlp_title(std::vector<Keyword>{kw(Category::bank_cards, 0.5, 0.4), kw(Category::weapons, 0.5, 0.4)});
  EXPECT_EQ(by_index.category, Category::weapons);
}

TEST(Analyze, OrthonormalEndToEnd) {
  // Hand-built table: category words on their own axis, filler words on
  // axes no prototype uses.
  EmbeddingTable t(8);
  t.insert("cocaine", basis(8, 0));
  t.insert("heroin", basis(8, 0));
  t.insert("pistol", basis(8, 1));
  t.insert("stealth", basis(8, 6));
  t.insert("shipping", basis(8, 7));
  const auto protos = orthonormal_prototypes();
  const KeywordResources res{&t, &protos, &default_stopwords()};
  KeywordParams params;
  params.k = 10;
  const auto a = analyze_text("Cocaine and heroin with stealth shipping. One pistol.", res, params);
  EXPECT_EQ(a.title.category, Category::drugs);
  std::set<std::string> terms;
  for (const auto& k : a.keywords) {
    EXPECT_TRUE(terms.insert(k.surface).second) << "duplicate " << k.surface;
    EXPECT_GE(k.relevance, -1.0);
    EXPECT_LE(k.relevance, 1.0);
    if (k.assigned) EXPECT_GE(k.similarity, params.min_similarity);
  }
  EXPECT_LE(a.keywords.size(), 10u);
  for (const auto& k : a.keywords) {
    if (k.surface == "cocaine") EXPECT_EQ(k.assigned, Category::drugs);
    if (k.surface == "stealth") EXPECT_FALSE(k.assigned);
    if (k.surface == "pistol") EXPECT_EQ(k.assigned, Category::weapons);
  }
  const auto again = analyze_text("Cocaine and heroin with stealth shipping. One pistol.", res, params);
  ASSERT_EQ(again.keywords.size(), a.keywords.size());
  for (std::size_t i = 0; i < a.keywords.size(); ++i) {
    EXPECT_EQ(again.keywords[i].surface, a.keywords[i].surface);
    EXPECT_EQ(again.keywords[i].relevance, a.keywords[i].relevance);
  }
}

TEST(Analyze, FixtureEmbeddingsFindDrugs) {
  const auto t = load_embeddings(test::fixture("embeddings.txt"));
  const auto protos = build_prototypes(default_seed_terms(), t);
  const KeywordResources res{&t, &protos, &default_stopwords()};
  const auto a = analyze_text("Premium cannabis and cocaine shipped in stealth packaging. Pills lab tested.", res,
                              KeywordParams{});
  EXPECT_EQ(a.title.category, Category::drugs);
  EXPECT_GT(a.title.confidence, 0.5);
  const auto j = keyword_to_json(a.keywords.front());
  EXPECT_TRUE(j.contains("term"));
  EXPECT_TRUE(j.contains("relevance"));
}
