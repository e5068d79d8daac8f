#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace onionlens::keywords {

using StopwordSet = std::unordered_set<std::string>;

/// Built-in English list.
const StopwordSet& default_stopwords();
/// One token per line; '#' starts a comment. Throws onionlens::Error.
StopwordSet load_stopwords(const std::filesystem::path& path);

/// Lowercase tokens split on anything that is not an ASCII letter or digit.
/// Bytes >= 0x80 count as letters so UTF-8 words stay whole. Digit-only
/// tokens are dropped.
std::vector<std::string> tokenize(std::string_view text);

/// tokenize() minus stopwords.
std::vector<std::string> content_tokens(std::string_view text, const StopwordSet& stopwords);

struct Candidate {
  std::string surface;              // tokens joined by one space
  std::vector<std::string> tokens;
  std::size_t position = 0;         // index of the first token in the content stream
};

/// Unique n-grams (1..ngram_max) over the stopword-filtered token stream,
/// ordered by first occurrence, shorter first at equal position.
std::vector<Candidate> extract_candidates(std::string_view text, const StopwordSet& stopwords, int ngram_max);

}  // namespace onionlens::keywords
