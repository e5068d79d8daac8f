#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "onionlens/domain/category.hpp"
#include "onionlens/infer/classify.hpp"

namespace onionlens::fusion {

/// One recommender's opinion; no category means it abstained.
struct TitleVote {
  std::optional<Category> category;
  double confidence = 0.0;
  CategoryScores votes;  // raw tallies behind the decision
};

/// Confidence-weighted vote over per-image top classes. The confidence is
/// the winner's share of all votes.
TitleVote classification_title(std::span<const infer::Classification> classifications);

enum class ActivitySource { none, classification, nlp, agreement };
std::string_view to_string(ActivitySource s) noexcept;

struct Activity {
  std::optional<Category> category;  // nullopt: undetermined
  double confidence = 0.0;
  ActivitySource source = ActivitySource::none;
};

/// Both absent: undetermined. One present: that one. Agreement: the shared
/// category at max confidence. Disagreement: the higher confidence, ties to
/// the image side.
Activity fuse(const TitleVote& classification, const TitleVote& nlp);

/// "Drugs Market"; "Undetermined" for nullopt.
std::string activity_title(std::optional<Category> c);

}  // namespace onionlens::fusion
