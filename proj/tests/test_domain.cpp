#include <gtest/gtest.h>

#include <cstdlib>

#include "onionlens/domain/category.hpp"
#include "onionlens/domain/config.hpp"
#include "support/support.hpp"

using namespace onionlens;

TEST(Category, CanonicalOrderIsFixed) {
  const char* ids[] = {"drugs", "weapons", "bank_cards", "identity_documents", "illegal_currencies"};
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    EXPECT_EQ(canonical_id(category_at(i)), ids[i]);
    EXPECT_EQ(index_of(category_at(i)), i);
  }
  EXPECT_THROW(category_at(5), std::out_of_range);
}

TEST(Category, ResolvesTableLabels) {
  EXPECT_EQ(resolve_category("Passport"), Category::identity_documents);
  EXPECT_EQ(resolve_category("drugs"), Category::drugs);
  EXPECT_EQ(resolve_category("Drugs"), Category::drugs);
  EXPECT_EQ(resolve_category("weapons"), Category::weapons);
  EXPECT_EQ(resolve_category("illegal currencies"), Category::illegal_currencies);
  EXPECT_EQ(resolve_category("Bank Cards"), Category::bank_cards);
  EXPECT_EQ(resolve_category("counterfeit currency trafficking"), Category::illegal_currencies);
  EXPECT_EQ(resolve_category("  BANK_cards "), Category::bank_cards);
}

TEST(Category, UnknownLabelThrows) {
  try {
    resolve_category("fish");
    FAIL() << "expected UnknownLabel";
  } catch (const UnknownLabel& e) {
    EXPECT_EQ(e.label(), "fish");
  }
  EXPECT_FALSE(try_resolve_category(""));
}

TEST(Category, DisplayNameRoundTrips) {
  for (Category c : kAllCategories) {
    EXPECT_EQ(resolve_category(display_name(c)), c);
    EXPECT_EQ(resolve_category(canonical_id(c)), c);
    for (auto alias : aliases(c)) EXPECT_EQ(resolve_category(alias), c) << alias;
  }
}

TEST(CategoryScores, JsonKeepsIndexMapping) {
  CategoryScores s;
  s.scores = {0.1, 0.2, 0.3, 0.15, 0.25};
  s.normalized = true;
  const nlohmann::json j = s;
  const auto back = j.get<CategoryScores>();
  EXPECT_EQ(back.scores, s.scores);
  EXPECT_EQ(back[Category::bank_cards], 0.3);
}

TEST(CategoryScores, ArgmaxTiePicksLowestIndex) {
  CategoryScores s;
  s.scores = {0.1, 0.4, 0.1, 0.4, 0.0};
  EXPECT_EQ(s.argmax(), Category::weapons);
  EXPECT_EQ(CategoryScores{}.argmax(), Category::drugs);
  const auto n = CategoryScores{}.normalize();
  for (double v : n.scores) EXPECT_DOUBLE_EQ(v, 0.2);
}

TEST(CategoryScores, NormalizeSumsToOne) {
  CategoryScores s;
  s.scores = {3, 1, 0, 0, 1};
  const auto n = s.normalize();
  EXPECT_TRUE(n.normalized);
  EXPECT_NEAR(n.total(), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(n[Category::drugs], 0.6);
}

TEST(Config, EmptyFileGivesDefaults) {
  test::TempDir dir;
  test::write_text(dir / "empty.json", "");
  const auto cfg = load_config(dir / "empty.json");
  const PipelineConfig defaults;
  EXPECT_EQ(cfg.proxy_url, "socks5h://127.0.0.1:9050");
  EXPECT_EQ(cfg.dedup_threshold, defaults.dedup_threshold);
  EXPECT_EQ(cfg.keywords.k, 10);
  EXPECT_EQ(cfg.keywords.ngram_max, 2);
  EXPECT_DOUBLE_EQ(cfg.keywords.mmr_lambda, 0.5);
  EXPECT_DOUBLE_EQ(cfg.keywords.min_similarity, 0.15);
  EXPECT_EQ(cfg.crawl.retries, 3);
  EXPECT_EQ(cfg.crawl.backoff_ms, 500);
  EXPECT_EQ(cfg.min_side, 64);
  EXPECT_EQ(cfg.crawl.max_images_per_scan, 50);
}

TEST(Config, ThresholdOutOfRangeNamesField) {
  try {
    parse_config(R"({"dedup_threshold": 65})");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "dedup_threshold");
  }
}

TEST(Config, EchoesValues) {
  const auto cfg = parse_config(R"({"mmr_lambda": 0.5, "k": 10, "max_pages": 7, "proxy_url": "socks5h://h:1"})");
  EXPECT_DOUBLE_EQ(cfg.keywords.mmr_lambda, 0.5);
  EXPECT_EQ(cfg.keywords.k, 10);
  EXPECT_EQ(cfg.crawl.max_pages, 7);
  EXPECT_EQ(cfg.proxy_url, "socks5h://h:1");
}

TEST(Config, RangeChecks) {
  EXPECT_THROW(parse_config(R"({"mmr_lambda": 1.5})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"min_similarity": -1.01})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"max_pages": 0})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"timeout_ms": -5})"), ValidationError);
  EXPECT_NO_THROW(parse_config(R"({"dedup_threshold": 0})"));
  EXPECT_NO_THROW(parse_config(R"({"dedup_threshold": 64})"));
  EXPECT_THROW(parse_config(R"({"no_such_key": 1})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"k": "ten"})"), ValidationError);
}

TEST(Config, MalformedIsParseError) {
  EXPECT_THROW(parse_config("{\"k\": "), ParseError);
  EXPECT_THROW(parse_config("[1, 2]"), ParseError);
  EXPECT_THROW(load_config("/nonexistent/onionlens.json"), ConfigError);
}

TEST(Config, EnvironmentProxyOverrides) {
  PipelineConfig cfg;
  ::setenv(kProxyEnv, "socks5h://10.0.0.1:9150", 1);
  apply_environment(cfg);
  ::unsetenv(kProxyEnv);
  EXPECT_EQ(cfg.proxy_url, "socks5h://10.0.0.1:9150");
}
