#include "onionlens/fusion/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>

#include "onionlens/curation/manifest.hpp"

namespace onionlens::fusion {
namespace {

using nlohmann::json;

json category_json(std::optional<Category> c) { return c ? json(canonical_id(*c)) : json(nullptr); }

json vote_json(const TitleVote& v) {
  return {{"category", category_json(v.category)},
          {"title", v.category ? json(activity_title(v.category)) : json(nullptr)},
          {"confidence", v.confidence},
          {"votes", v.votes.scores}};
}

bool close_numbers(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
}

bool close_at(const json& a, const json& b, double tol, const std::string& path, std::string* where) {
  auto fail = [&] {
    if (where) *where = path.empty() ? "/" : path;
    return false;
  };
  if (a.is_number() && b.is_number()) return close_numbers(a.get<double>(), b.get<double>(), tol) || fail();
  if (a.type() != b.type()) return fail();
  if (a.is_object()) {
    if (a.size() != b.size()) return fail();
    for (const auto& [key, value] : a.items()) {
      if (!b.contains(key)) return fail();
      if (!close_at(value, b.at(key), tol, path + "/" + key, where)) return false;
    }
    return true;
  }
  if (a.is_array()) {
    if (a.size() != b.size()) return fail();
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!close_at(a[i], b[i], tol, path + "/" + std::to_string(i), where)) return false;
    return true;
  }
  return a == b || fail();
}

}  // namespace

json to_json(const ActivityReport& r) {
  json nlp = vote_json(r.nlp);
  json kws = json::array();
  for (const auto& kw : r.keywords) kws.push_back(keywords::keyword_to_json(kw));
  nlp["keywords"] = std::move(kws);

  json images = json::array();
  for (const auto& img : r.images)
    images.push_back({{"source_url", img.source_url},
                      {"dhash", curation::format_dhash(img.dhash)},
                      {"top", canonical_id(img.classification.top)},
                      {"confidence", img.classification.confidence},
                      {"scores", img.classification.scores.scores}});

  json errors = json::array();
  for (const auto& e : r.errors) errors.push_back({{"url", e.url}, {"kind", e.kind}, {"message", e.message}});

  const auto& s = r.stats;
  return {
      {"schema_version", kReportSchemaVersion},
      {"url", r.url},
      {"activity", r.activity.category ? json(canonical_id(*r.activity.category)) : json("undetermined")},
      {"activity_title", activity_title(r.activity.category)},
      {"activity_confidence", r.activity.confidence},
      {"activity_source", to_string(r.activity.source)},
      {"nlp_title", std::move(nlp)},
      {"classification_title", vote_json(r.classification)},
      {"images", std::move(images)},
      {"stats",
       {{"pages_fetched", s.pages_fetched},
        {"images_discovered", s.images_discovered},
        {"images_downloaded", s.images_downloaded},
        {"images_unusable", s.images_unusable},
        {"images_duplicate", s.images_duplicate},
        {"images_classified", s.images_classified},
        {"keywords", s.keywords},
        {"bytes_downloaded", s.bytes_downloaded},
        {"fetch_errors", s.fetch_errors}}},
      {"errors", std::move(errors)},
      {"versions",
       {{"onionlens", r.versions.onionlens},
        {"report_schema", kReportSchemaVersion},
        {"model_total_params", r.versions.model_total_params},
        {"model_trainable_params",
         r.versions.model_trainable_params ? json(*r.versions.model_trainable_params) : json(nullptr)},
        {"embedding_dimension", r.versions.embedding_dimension}}},
      {"timestamps", {{"started_at", r.started_at}, {"finished_at", r.finished_at}}},
  };
}

json strip_volatile(const json& report) {
  json out = report;
  if (out.is_object()) {
    out.erase("timestamps");
    out.erase("id");
    out.erase("job_id");
  }
  return out;
}

bool json_close(const json& a, const json& b, double tol, std::string* where) {
  return close_at(a, b, tol, "", where);
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t secs = std::chrono::system_clock::to_time_t(t);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  const std::size_t n = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%.*s.%03dZ", static_cast<int>(n), buf, static_cast<int>(ms));
  return out;
}

}  // namespace onionlens::fusion
