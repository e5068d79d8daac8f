#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "onionlens/fusion/fusion.hpp"
#include "onionlens/fusion/metrics.hpp"
#include "onionlens/fusion/report.hpp"
#include "support/support.hpp"

using namespace onionlens;
using namespace onionlens::fusion;

namespace {

using Pairs = std::vector<std::pair<Category, Category>>;

Pairs pairs_from_matrix(const std::vector<std::vector<int>>& m) {
  Pairs out;
  for (std::size_t a = 0; a < m.size(); ++a)
    for (std::size_t p = 0; p < m[a].size(); ++p)
      for (int k = 0; k < m[a][p]; ++k) out.emplace_back(category_at(a), category_at(p));
  return out;
}

infer::Classification vote(Category top, double confidence) {
  infer::Classification c;
  c.top = top;
  c.confidence = confidence;
  c.scores[top] = confidence;
  return c;
}

TitleVote title(std::optional<Category> c, double conf) {
  TitleVote v;
  v.category = c;
  v.confidence = conf;
  return v;
}

}  // namespace

TEST(Confusion, AllCorrectIsDiagonal) {
  Pairs pairs;
  for (int i = 0; i < 20; ++i) pairs.emplace_back(category_at(i % 5), category_at(i % 5));
  const auto cm = confusion(pairs);
  for (Category a : kAllCategories)
    for (Category p : kAllCategories) EXPECT_EQ(cm.at(a, p), a == p ? 4 : 0);
  const auto report = evaluate(cm);
  EXPECT_DOUBLE_EQ(report.accuracy.value, 1.0);
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    EXPECT_DOUBLE_EQ(report.precision[c].value, 1.0);
    EXPECT_DOUBLE_EQ(report.recall[c].value, 1.0);
  }
}

TEST(Confusion, ThreeClassFixture) {
  const auto cm = confusion(pairs_from_matrix({{5, 1, 0}, {0, 4, 2}, {1, 0, 7}}));
  EXPECT_EQ(cm.total(), 20);
  EXPECT_EQ(cm.tp(Category::drugs), 5);
  EXPECT_EQ(cm.fp(Category::drugs), 1);
  EXPECT_EQ(cm.fn(Category::drugs), 1);
  EXPECT_EQ(cm.tn(Category::drugs), 13);
  EXPECT_DOUBLE_EQ(accuracy(cm).value, 16.0 / 20.0);
  EXPECT_DOUBLE_EQ(precision(cm, Category::drugs).value, 5.0 / 6.0);
  EXPECT_DOUBLE_EQ(recall(cm, Category::drugs).value, 5.0 / 6.0);
}

TEST(Confusion, EmptyInput) {
  const auto cm = confusion(Pairs{});
  EXPECT_EQ(cm.total(), 0);
  EXPECT_EQ(cm, ConfusionMatrix{});
  const auto acc = accuracy(cm);
  EXPECT_FALSE(acc.defined);
  EXPECT_EQ(acc.value, 0.0);
  const auto report = evaluate(cm);
  EXPECT_EQ(report.macro_precision.classes, 0);
}

TEST(Metrics, HeadlineAccuracy) {
  // 94 correct out of 100 items, errors spread over several classes.
  Pairs pairs;
  for (int i = 0; i < 100; ++i) {
    const auto actual = category_at(static_cast<std::size_t>(i % 5));
    pairs.emplace_back(actual, i < 6 ? category_at(static_cast<std::size_t>((i + 1) % 5)) : actual);
  }
  const auto acc = accuracy(confusion(pairs));
  EXPECT_EQ(acc.numerator, 94);
  EXPECT_EQ(acc.denominator, 100);
  EXPECT_DOUBLE_EQ(acc.value, 0.94);
}

TEST(Metrics, ZeroDenominatorFlagged) {
  ConfusionMatrix cm;
  cm.add(Category::drugs, Category::drugs, 3);
  const auto p = precision(cm, Category::weapons);
  EXPECT_FALSE(p.defined);
  EXPECT_EQ(p.value, 0.0);
  const auto report = evaluate(cm);
  EXPECT_EQ(report.macro_precision.classes, 1);
  EXPECT_DOUBLE_EQ(report.macro_precision.value, 1.0);
}

TEST(Metrics, BruteForceOracleOnRandomSets) {
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> size(0, 300);
    std::uniform_int_distribution<int> cls(0, 4);
    Pairs pairs(static_cast<std::size_t>(size(rng)));
    for (auto& p : pairs) p = {category_at(cls(rng)), category_at(cls(rng))};
    const auto cm = confusion(pairs);
    std::int64_t correct = 0;
    for (auto& [a, p] : pairs) correct += a == p;
    for (Category c : kAllCategories) {
      std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
      for (auto& [a, p] : pairs) {
        tp += a == c && p == c;
        fp += a != c && p == c;
        fn += a == c && p != c;
        tn += a != c && p != c;
      }
      ASSERT_EQ(cm.tp(c), tp);
      ASSERT_EQ(cm.fp(c), fp);
      ASSERT_EQ(cm.fn(c), fn);
      ASSERT_EQ(cm.tn(c), tn);
      const auto pr = precision(cm, c);
      ASSERT_EQ(pr.numerator, tp);
      ASSERT_EQ(pr.denominator, tp + fp);
      ASSERT_EQ(pr.value, tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0);
      const auto rc = recall(cm, c);
      ASSERT_EQ(rc.value, tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0);
    }
    const auto acc = accuracy(cm);
    ASSERT_EQ(acc.numerator, correct);
    ASSERT_EQ(acc.value, pairs.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(pairs.size()));
    std::int64_t tp_sum = 0;
    for (Category c : kAllCategories) tp_sum += cm.tp(c);
    ASSERT_EQ(tp_sum, cm.trace());

    auto shuffled = pairs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    ASSERT_EQ(confusion(shuffled), cm);
  }
}

TEST(Metrics, BinaryRestrictionMatchesScalarFormulas) {
  std::mt19937 rng(8);
  std::uniform_int_distribution<int> count(0, 30);
  for (int trial = 0; trial < 100; ++trial) {
    const int tp = count(rng), fn = count(rng), fp = count(rng), tn = count(rng);
    // class drugs is "positive", weapons "negative"
    ConfusionMatrix cm;
    cm.add(Category::drugs, Category::drugs, tp);
    cm.add(Category::drugs, Category::weapons, fn);
    cm.add(Category::weapons, Category::drugs, fp);
    cm.add(Category::weapons, Category::weapons, tn);
    EXPECT_EQ(cm.tn(Category::drugs), tn);
    if (tp + fp) EXPECT_EQ(precision(cm, Category::drugs).value, static_cast<double>(tp) / (tp + fp));
    if (tp + fn) EXPECT_EQ(recall(cm, Category::drugs).value, static_cast<double>(tp) / (tp + fn));
    const auto b = binary_accuracy(tp, tn, fp, fn);
    EXPECT_EQ(b.value, accuracy(cm).value);
    if (tp + tn + fp + fn) EXPECT_EQ(b.value, static_cast<double>(tp + tn) / (tp + tn + fp + fn));
  }
}

TEST(Metrics, ValuesInUnitInterval) {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> v(0, 9);
  for (int trial = 0; trial < 50; ++trial) {
    ConfusionMatrix::Counts counts{};
    for (auto& row : counts)
      for (auto& x : row) x = v(rng);
    const auto r = evaluate(ConfusionMatrix(counts));
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      EXPECT_GE(r.precision[c].value, 0.0);
      EXPECT_LE(r.precision[c].value, 1.0);
      EXPECT_GE(r.recall[c].value, 0.0);
      EXPECT_LE(r.recall[c].value, 1.0);
    }
    EXPECT_LE(r.macro_precision.value, 1.0);
    EXPECT_LE(r.accuracy.value, 1.0);
  }
}

TEST(Metrics, JsonShape) {
  const auto j = to_json(evaluate(confusion(pairs_from_matrix({{5, 1, 0}, {0, 4, 2}, {1, 0, 7}}))));
  EXPECT_EQ(j.at("total"), 20);
  EXPECT_DOUBLE_EQ(j.at("accuracy").at("value").get<double>(), 0.8);
  EXPECT_EQ(j.at("confusion_matrix").at("rows").size(), 5u);
  EXPECT_EQ(j.at("per_class").at("drugs").at("tp"), 5);
  EXPECT_EQ(j.at("per_class").at("illegal_currencies").at("precision").at("defined"), false);
}

TEST(ClassificationTitle, Examples) {
  const auto unanimous = classification_title(std::vector{vote(Category::weapons, 0.9), vote(Category::weapons, 0.8),
                                                          vote(Category::weapons, 0.99)});
  EXPECT_EQ(unanimous.category, Category::weapons);
  EXPECT_DOUBLE_EQ(unanimous.confidence, 1.0);

  const auto split = classification_title(std::vector{vote(Category::drugs, 0.6), vote(Category::drugs, 0.6),
                                                      vote(Category::weapons, 0.9)});
  EXPECT_EQ(split.category, Category::drugs);
  EXPECT_NEAR(split.confidence, 1.2 / 2.1, 1e-12);
  EXPECT_NEAR(split.confidence, 0.571, 1e-3);

  const auto none = classification_title(std::vector<infer::Classification>{});
  EXPECT_FALSE(none.category);
}

TEST(ClassificationTitle, TieGoesToLowestIndex) {
  const auto t = classification_title(std::vector{vote(Category::identity_documents, 0.5), vote(Category::weapons, 0.5)});
  EXPECT_EQ(t.category, Category::weapons);
}

TEST(Fuse, Examples) {
  const auto agree = fuse(title(Category::drugs, 0.97), title(Category::drugs, 0.8));
  EXPECT_EQ(agree.category, Category::drugs);
  EXPECT_DOUBLE_EQ(agree.confidence, 0.97);
  EXPECT_EQ(agree.source, ActivitySource::agreement);
  EXPECT_EQ(activity_title(agree.category), "Drugs Market");

  const auto nlp_only = fuse(title(std::nullopt, 0), title(Category::weapons, 0.6));
  EXPECT_EQ(nlp_only.category, Category::weapons);
  EXPECT_EQ(nlp_only.source, ActivitySource::nlp);

  const auto conflict = fuse(title(Category::bank_cards, 0.55), title(Category::drugs, 0.80));
  EXPECT_EQ(conflict.category, Category::drugs);
  EXPECT_EQ(conflict.source, ActivitySource::nlp);

  const auto none = fuse(title(std::nullopt, 0), title(std::nullopt, 0));
  EXPECT_FALSE(none.category);
  EXPECT_EQ(activity_title(none.category), "Undetermined");
}

TEST(Fuse, PropertyOverAllCases) {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  std::uniform_int_distribution<int> cls(-1, 4);
  for (int trial = 0; trial < 5000; ++trial) {
    const int ci = cls(rng), ni = cls(rng);
    // Ties get exercised by drawing the same confidence now and then.
    const double cc = conf(rng);
    const double nc = trial % 7 == 0 ? cc : conf(rng);
    const auto c = title(ci < 0 ? std::nullopt : std::optional(category_at(ci)), cc);
    const auto n = title(ni < 0 ? std::nullopt : std::optional(category_at(ni)), nc);
    const auto a = fuse(c, n);
    EXPECT_EQ(a.category, fuse(c, n).category);
    if (!c.category && !n.category) {
      EXPECT_FALSE(a.category);
      EXPECT_EQ(a.source, ActivitySource::none);
    } else if (!n.category) {
      EXPECT_EQ(a.category, c.category);
      EXPECT_EQ(a.source, ActivitySource::classification);
    } else if (!c.category) {
      EXPECT_EQ(a.category, n.category);
      EXPECT_EQ(a.source, ActivitySource::nlp);
    } else if (*c.category == *n.category) {
      EXPECT_EQ(a.category, c.category);
      EXPECT_DOUBLE_EQ(a.confidence, std::max(cc, nc));
    } else {
      EXPECT_EQ(a.category, nc > cc ? n.category : c.category);
    }
  }
}

TEST(Report, JsonSchema) {
  ActivityReport r;
  r.url = "http://abc.onion/";
  r.classification = classification_title(std::vector{vote(Category::drugs, 0.9)});
  r.activity = fuse(r.classification, TitleVote{});
  ImageResult img;
  img.source_url = "http://abc.onion/a.png";
  img.dhash = 0xff;
  img.classification = vote(Category::drugs, 0.9);
  r.images.push_back(img);
  r.started_at = utc_timestamp();
  r.finished_at = r.started_at;
  const auto j = to_json(r);
  EXPECT_EQ(j.at("url"), r.url);
  EXPECT_EQ(j.at("activity"), "drugs");
  EXPECT_EQ(j.at("activity_title"), "Drugs Market");
  EXPECT_TRUE(j.at("nlp_title").at("category").is_null());
  EXPECT_TRUE(j.at("nlp_title").at("keywords").is_array());
  EXPECT_EQ(j.at("classification_title").at("category"), "drugs");
  EXPECT_EQ(j.at("images")[0].at("dhash"), "00000000000000ff");
  EXPECT_EQ(j.at("images")[0].at("scores").size(), 5u);
  EXPECT_TRUE(j.contains("stats"));
  EXPECT_TRUE(j.contains("versions"));
  const auto stripped = strip_volatile(j);
  EXPECT_FALSE(stripped.contains("timestamps"));
  EXPECT_TRUE(json_close(stripped, strip_volatile(to_json(r)), 0.0));

  const auto undetermined = to_json(ActivityReport{});
  EXPECT_EQ(undetermined.at("activity"), "undetermined");
  EXPECT_TRUE(undetermined.at("classification_title").at("category").is_null());
}

TEST(Report, JsonCloseTolerance) {
  const nlohmann::json a = {{"x", 1.0}, {"y", {1, 2}}};
  nlohmann::json b = a;
  b["x"] = 1.0 + 1e-9;
  EXPECT_TRUE(json_close(a, b, 1e-6));
  b["x"] = 1.1;
  std::string where;
  EXPECT_FALSE(json_close(a, b, 1e-6, &where));
  EXPECT_NE(where.find('x'), std::string::npos);
  EXPECT_FALSE(json_close(a, nlohmann::json{{"x", 1.0}}, 1e-6));
}

TEST(Report, TimestampFormat) {
  const auto t = utc_timestamp(std::chrono::system_clock::time_point(std::chrono::milliseconds(1700000000123)));
  EXPECT_EQ(t, "2023-11-14T22:13:20.123Z");
}
