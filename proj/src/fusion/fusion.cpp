#include "onionlens/fusion/fusion.hpp"

namespace onionlens::fusion {

TitleVote classification_title(std::span<const infer::Classification> classifications) {
  TitleVote v;
  if (classifications.empty()) return v;
  for (const auto& c : classifications) v.votes[c.top] += c.confidence;
  const double total = v.votes.total();
  v.category = v.votes.argmax();
  v.confidence = total > 0.0 ? v.votes[*v.category] / total : 0.0;
  return v;
}

std::string_view to_string(ActivitySource s) noexcept {
  switch (s) {
    case ActivitySource::classification:
      return "classification";
    case ActivitySource::nlp:
      return "nlp";
    case ActivitySource::agreement:
      return "agreement";
    case ActivitySource::none:
      break;
  }
  return "none";
}

Activity fuse(const TitleVote& classification, const TitleVote& nlp) {
  const auto& c = classification;
  if (!c.category && !nlp.category) return {};
  if (!nlp.category) return {c.category, c.confidence, ActivitySource::classification};
  if (!c.category) return {nlp.category, nlp.confidence, ActivitySource::nlp};
  if (*c.category == *nlp.category)
    return {c.category, std::max(c.confidence, nlp.confidence), ActivitySource::agreement};
  if (nlp.confidence > c.confidence) return {nlp.category, nlp.confidence, ActivitySource::nlp};
  return {c.category, c.confidence, ActivitySource::classification};
}

std::string activity_title(std::optional<Category> c) {
  if (!c) return "Undetermined";
  return std::string(display_name(*c)) + " Market";
}

}  // namespace onionlens::fusion
