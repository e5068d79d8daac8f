#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "onionlens/curation/image.hpp"

namespace onionlens::curation {

/// Greedy first-wins pass: element i is kept iff no previously kept hash is
/// within `threshold` Hamming bits.
std::vector<bool> dedupe_mask(std::span<const std::uint64_t> hashes, int threshold);

struct DedupeResult {
  std::vector<ImageRecord> kept;
  std::vector<ImageRecord> dropped;
};

/// Every record must be decoded (carry a dhash); throws std::invalid_argument
/// otherwise. Input order is preserved within each output list.
DedupeResult dedupe(std::vector<ImageRecord> records, int threshold);

}  // namespace onionlens::curation
