#include <gtest/gtest.h>

#include <random>

#include "onionlens/curation/decode.hpp"
#include "onionlens/curation/dedupe.hpp"
#include "onionlens/curation/dhash.hpp"
#include "onionlens/curation/manifest.hpp"
#include "onionlens/curation/resize.hpp"
#include "support/support.hpp"

using namespace onionlens;
using namespace onionlens::curation;

namespace {

DecodedImage image_from_json(const nlohmann::json& j) {
  return DecodedImage(j.at("width"), j.at("height"), j.at("channels"), j.at("pixels").get<std::vector<std::uint8_t>>());
}

ImageRecord record_for(const DecodedImage& img, std::string url) {
  ImageRecord r;
  r.source_url = std::move(url);
  r.status = DecodeStatus::success();
  r.dhash = dhash64(img);
  return r;
}

}  // namespace

TEST(Decode, PngHappyPath) {
  const auto bytes = test::read_bytes(test::fixture("codecs/rgb.png"));
  const auto res = decode_and_validate(bytes);
  ASSERT_TRUE(res.status.ok) << res.status.reason;
  EXPECT_EQ(res.image->width, 80);
  EXPECT_EQ(res.image->height, 72);
  EXPECT_EQ(res.image->channels, 3);
  const auto expected = test::read_json(test::fixture("codecs/expected.json")).at("rgb").get<std::vector<std::uint8_t>>();
  EXPECT_EQ(res.image->pixels, expected);
}

TEST(Decode, Square128Png) {
  const auto img = test::solid(128, 128, 10, 20, 30);
  const auto res = decode_and_validate(encode_png(img));
  ASSERT_TRUE(res.status.ok);
  EXPECT_EQ(res.image->width, 128);
  EXPECT_EQ(res.image->height, 128);
  EXPECT_EQ(res.image->channels, 3);
  EXPECT_EQ(res.image->pixels, img.pixels);
}

TEST(Decode, LosslessFormatsMatchPixels) {
  const auto expected = test::read_json(test::fixture("codecs/expected.json"));
  const auto webp = decode_and_validate(test::read_bytes(test::fixture("codecs/rgb.webp")));
  ASSERT_TRUE(webp.status.ok) << webp.status.reason;
  EXPECT_EQ(webp.image->pixels, expected.at("rgb").get<std::vector<std::uint8_t>>());

  const auto rgba = decode_and_validate(test::read_bytes(test::fixture("codecs/rgba.png")));
  ASSERT_TRUE(rgba.status.ok);
  EXPECT_EQ(rgba.image->channels, 3);
  EXPECT_EQ(rgba.image->pixels, expected.at("rgb").get<std::vector<std::uint8_t>>());

  const auto gif = decode_and_validate(test::read_bytes(test::fixture("codecs/anim.gif")));
  ASSERT_TRUE(gif.status.ok) << gif.status.reason;
  EXPECT_EQ(gif.image->width, 66);
  EXPECT_EQ(gif.image->height, 70);
  EXPECT_EQ(gif.image->pixels, expected.at("gif_first").get<std::vector<std::uint8_t>>());
}

TEST(Decode, GrayAndJpeg) {
  const auto gray = decode_and_validate(test::read_bytes(test::fixture("codecs/gray.png")));
  ASSERT_TRUE(gray.status.ok);
  EXPECT_EQ(gray.image->channels, 1);
  const auto jpg = decode_and_validate(test::read_bytes(test::fixture("codecs/rgb.jpg")));
  ASSERT_TRUE(jpg.status.ok);
  EXPECT_EQ(jpg.image->width, 80);
  EXPECT_EQ(jpg.image->height, 72);
}

TEST(Decode, UnusableCases) {
  const auto icon = decode_and_validate(test::read_bytes(test::fixture("codecs/icon16.png")), 64);
  EXPECT_FALSE(icon.status.ok);
  EXPECT_EQ(icon.status.reason, "too_small");
  EXPECT_FALSE(icon.image);
  EXPECT_TRUE(decode_and_validate(test::read_bytes(test::fixture("codecs/icon16.png")), 16).status.ok);

  const auto trunc = decode_and_validate(test::read_bytes(test::fixture("codecs/truncated.jpg")));
  EXPECT_FALSE(trunc.status.ok);
  EXPECT_EQ(trunc.status.reason, "decode_failed");

  const std::vector<std::uint8_t> junk = {'n', 'o', 't', ' ', 'a', 'n', ' ', 'i', 'm', 'g'};
  EXPECT_EQ(decode_and_validate(junk).status.reason, "decode_failed");
  EXPECT_EQ(decode_and_validate({}).status.reason, "decode_failed");
}

TEST(Curate, SetsHashIffDecoded) {
  ImageRecord good;
  good.bytes = encode_png(test::solid(70, 70, 1, 2, 3));
  curate(good);
  EXPECT_TRUE(good.decoded());
  EXPECT_TRUE(good.dhash.has_value());
  ImageRecord bad;
  bad.bytes = {1, 2, 3};
  curate(bad);
  EXPECT_FALSE(bad.decoded());
  EXPECT_FALSE(bad.dhash.has_value());
}

TEST(DHash, UniformGrayIsZero) {
  DecodedImage img(40, 30, 1);
  std::fill(img.pixels.begin(), img.pixels.end(), 128);
  EXPECT_EQ(dhash64(img), 0u);
  EXPECT_EQ(dhash64(test::solid(64, 64, 128, 128, 128)), 0u);
}

TEST(DHash, MatchesCommittedFixtures) {
  const auto fixtures = test::read_json(test::fixture("dhash.json"));
  for (const auto& [name, j] : fixtures.items()) {
    const auto img = image_from_json(j);
    EXPECT_EQ(format_dhash(dhash64(img)), j.at("hash").get<std::string>()) << name;
    EXPECT_EQ(dhash64(img), test::oracle_dhash(img)) << name;
  }
}

TEST(DHash, DeterministicAndStableUnderPngRoundTrip) {
  const auto img = image_from_json(test::read_json(test::fixture("dhash.json")).at("rgb"));
  const auto copy = img;
  EXPECT_EQ(dhash64(img), dhash64(copy));
  const auto again = decode_and_validate(encode_png(img), 1);
  ASSERT_TRUE(again.status.ok);
  EXPECT_EQ(dhash64(*again.image), dhash64(img));
}

TEST(DHash, BrightnessShiftInvariant) {
  // Values kept inside [10, 245] so a +-10 shift never clips.
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> v(10, 245);
  for (int trial = 0; trial < 20; ++trial) {
    DecodedImage img(37, 29, 3);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(v(rng));
    for (int shift : {-10, 10}) {
      auto shifted = img;
      for (auto& p : shifted.pixels) p = static_cast<std::uint8_t>(p + shift);
      EXPECT_EQ(hamming(dhash64(img), dhash64(shifted)), 0);
    }
  }
}

TEST(Hamming, Examples) {
  const std::uint64_t h = 0x0123456789abcdefULL;
  EXPECT_EQ(hamming(h, h), 0);
  EXPECT_EQ(hamming(0, ~std::uint64_t{0}), 64);
  EXPECT_EQ(hamming(0b1010, 0b0110), 2);
}

TEST(Hamming, MetricOnRandomTriples) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 10000; ++i) {
    const auto a = rng(), b = rng(), c = rng();
    EXPECT_EQ(hamming(a, b), hamming(b, a));
    EXPECT_EQ(hamming(a, a), 0);
    if (a != b) EXPECT_GT(hamming(a, b), 0);
    EXPECT_LE(hamming(a, c), hamming(a, b) + hamming(b, c));
  }
}

TEST(Resize, IdentityWhenSizesMatch) {
  std::vector<double> plane(12);
  for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = static_cast<double>(i * i);
  EXPECT_EQ(resize_bilinear(plane, 4, 3, 4, 3), plane);
  EXPECT_THROW(resize_bilinear(plane, 5, 3, 4, 3), std::invalid_argument);
}

TEST(Dedupe, ExactCopies) {
  const auto img = test::solid(64, 64, 9, 90, 200);
  std::vector<ImageRecord> recs = {record_for(img, "a"), record_for(img, "b"), record_for(img, "c")};
  const auto res = dedupe(recs, 0);
  ASSERT_EQ(res.kept.size(), 1u);
  EXPECT_EQ(res.kept[0].source_url, "a");
  EXPECT_TRUE(res.kept[0].kept);
  EXPECT_EQ(res.dropped.size(), 2u);
}

TEST(Dedupe, DistinctNoiseImagesBothKept) {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> v(0, 255);
  DecodedImage a(64, 64, 3), b(64, 64, 3);
  for (auto& p : a.pixels) p = static_cast<std::uint8_t>(v(rng));
  for (auto& p : b.pixels) p = static_cast<std::uint8_t>(v(rng));
  ASSERT_GT(hamming(dhash64(a), dhash64(b)), 4);
  const auto res = dedupe({record_for(a, "a"), record_for(b, "b")}, 4);
  EXPECT_EQ(res.kept.size(), 2u);
  EXPECT_TRUE(res.dropped.empty());
}

TEST(Dedupe, RejectsUndecodedRecords) {
  ImageRecord r;
  EXPECT_THROW(dedupe({r}, 4), std::invalid_argument);
}

TEST(Dedupe, CorpusMatchesClusteringOracle) {
  const auto corpus = test::make_dedup_corpus();
  ASSERT_EQ(corpus.images.size(), 100u);
  std::vector<std::uint64_t> hashes;
  for (const auto& img : corpus.images) hashes.push_back(test::oracle_dhash(img));
  bool tight = false;
  const auto expected = test::oracle_dedupe(hashes, 4, &tight);
  ASSERT_TRUE(tight) << "corpus clusters overlap; the oracle comparison would be meaningless";

  std::vector<ImageRecord> recs;
  for (std::size_t i = 0; i < corpus.images.size(); ++i)
    recs.push_back(record_for(corpus.images[i], std::to_string(i)));
  for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(*recs[i].dhash, hashes[i]);
  const auto res = dedupe(recs, 4);
  std::vector<std::size_t> kept;
  for (const auto& r : res.kept) kept.push_back(std::stoul(r.source_url));
  EXPECT_EQ(kept, expected);
  EXPECT_EQ(res.kept.size() + res.dropped.size(), 100u);
  EXPECT_EQ(kept.size(), 70u);
}

TEST(Dedupe, IdempotentAndMonotone) {
  const auto corpus = test::make_dedup_corpus(77);
  std::vector<std::uint64_t> hashes;
  for (const auto& img : corpus.images) hashes.push_back(dhash64(img));
  std::size_t previous = hashes.size() + 1;
  for (int t = 0; t <= 64; t += 4) {
    const auto mask = dedupe_mask(hashes, t);
    std::vector<std::uint64_t> kept;
    for (std::size_t i = 0; i < hashes.size(); ++i)
      if (mask[i]) kept.push_back(hashes[i]);
    const auto again = dedupe_mask(kept, t);
    EXPECT_TRUE(std::all_of(again.begin(), again.end(), [](bool b) { return b; })) << t;
    EXPECT_LE(kept.size(), previous);
    previous = kept.size();
  }
  const auto all = dedupe_mask(hashes, 64);
  EXPECT_EQ(std::count(all.begin(), all.end(), true), 1);
}

TEST(Manifest, DatasetCountsRoundTrip) {
  const std::pair<Category, int> counts[] = {{Category::drugs, 252},
                                             {Category::weapons, 319},
                                             {Category::illegal_currencies, 229},
                                             {Category::identity_documents, 229},
                                             {Category::bank_cards, 295}};
  DatasetManifest m;
  int n = 0;
  for (auto [cat, count] : counts) {
    for (int i = 0; i < count; ++i, ++n) {
      ManifestEntry e;
      e.path = std::string(canonical_id(cat)) + "/" + std::to_string(i) + ".png";
      e.label = cat;
      e.dhash = static_cast<std::uint64_t>(n) * 0x9e3779b97f4a7c15ULL;
      e.split = static_cast<Split>(n % 3);
      e.source_url = "http://x.onion/" + std::to_string(n);
      m.entries.push_back(e);
    }
  }
  test::TempDir dir;
  save_manifest(m, dir / "m.jsonl");
  const auto back = load_manifest(dir / "m.jsonl");
  EXPECT_EQ(back.entries, m.entries);
  const auto c = back.counts();
  EXPECT_EQ(c[index_of(Category::drugs)], 252u);
  EXPECT_EQ(c[index_of(Category::weapons)], 319u);
  EXPECT_EQ(c[index_of(Category::illegal_currencies)], 229u);
  EXPECT_EQ(c[index_of(Category::identity_documents)], 229u);
  EXPECT_EQ(c[index_of(Category::bank_cards)], 295u);
  EXPECT_EQ(serialize_manifest(back), test::read_text(dir / "m.jsonl"));
}

TEST(Manifest, EmptyAndAlias) {
  DatasetManifest empty;
  const auto back = parse_manifest(serialize_manifest(empty));
  EXPECT_TRUE(back.entries.empty());
  for (auto c : back.counts()) EXPECT_EQ(c, 0u);

  const std::string text =
      R"({"schema":"onionlens-manifest","version":1,"total":1,"counts":{"drugs":0,"weapons":0,"bank_cards":0,"identity_documents":1,"illegal_currencies":0}})"
      "\n"
      R"({"path":"p.png","label":"Passport","dhash":"00000000000000ff","split":"train","source_url":"u"})"
      "\n";
  const auto m = parse_manifest(text);
  ASSERT_EQ(m.entries.size(), 1u);
  EXPECT_EQ(m.entries[0].label, Category::identity_documents);
  EXPECT_EQ(m.entries[0].dhash, 0xffu);
}

TEST(Manifest, SchemaErrors) {
  const std::string header =
      R"({"schema":"onionlens-manifest","version":1,"total":1,"counts":{"drugs":1,"weapons":0,"bank_cards":0,"identity_documents":0,"illegal_currencies":0}})"
      "\n";
  EXPECT_THROW(parse_manifest(header + R"({"path":"a","label":"fish","dhash":"0000000000000000","split":"train","source_url":""})" "\n"),
               SchemaError);
  EXPECT_THROW(parse_manifest(header + R"({"path":"a","label":"drugs","dhash":"0000000000000000","split":"train","source_url":"","extra":1})" "\n"),
               SchemaError);
  EXPECT_THROW(parse_manifest(header + R"({"path":"a","label":"weapons","dhash":"0000000000000000","split":"train","source_url":""})" "\n"),
               SchemaError);  // stored counts disagree
  EXPECT_THROW(parse_manifest(header + R"({"path":"a","label":"drugs","dhash":"xyz","split":"train","source_url":""})" "\n"),
               SchemaError);
  EXPECT_THROW(load_manifest("/nonexistent/manifest.jsonl"), IoError);
}

TEST(Manifest, DuplicatePathsRejected) {
  DatasetManifest m;
  m.entries.push_back({"a.png", Category::drugs, 1, Split::train, ""});
  m.entries.push_back({"a.png", Category::drugs, 2, Split::train, ""});
  EXPECT_THROW(parse_manifest(serialize_manifest(m)), SchemaError);
}

TEST(Manifest, DhashFormatting) {
  EXPECT_EQ(format_dhash(0xabcULL), "0000000000000abc");
  EXPECT_EQ(parse_dhash("0000000000000ABC"), 0xabcULL);
  EXPECT_FALSE(parse_dhash("abc"));
  EXPECT_FALSE(parse_dhash("000000000000000g"));
}
