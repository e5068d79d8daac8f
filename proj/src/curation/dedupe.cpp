#include "onionlens/curation/dedupe.hpp"

#include <stdexcept>

#include "onionlens/curation/dhash.hpp"

namespace onionlens::curation {

std::vector<bool> dedupe_mask(std::span<const std::uint64_t> hashes, int threshold) {
  std::vector<bool> keep(hashes.size(), false);
  std::vector<std::uint64_t> kept;
  for (std::size_t i = 0; i < hashes.size(); ++i) {
    bool duplicate = false;
    for (auto h : kept) {
      if (hamming(h, hashes[i]) <= threshold) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) {
      kept.push_back(hashes[i]);
      keep[i] = true;
    }
  }
  return keep;
}

DedupeResult dedupe(std::vector<ImageRecord> records, int threshold) {
  std::vector<std::uint64_t> hashes;
  hashes.reserve(records.size());
  for (const auto& r : records) {
    if (!r.dhash) throw std::invalid_argument("dedupe: record " + r.source_url + " has no dhash");
    hashes.push_back(*r.dhash);
  }
  const auto mask = dedupe_mask(hashes, threshold);
  DedupeResult result;
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].kept = mask[i];
    (mask[i] ? result.kept : result.dropped).push_back(std::move(records[i]));
  }
  return result;
}

}  // namespace onionlens::curation
