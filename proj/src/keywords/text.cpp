#include "onionlens/keywords/text.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "onionlens/error.hpp"

namespace onionlens::keywords {
namespace {

// NLTK's English list plus common page boilerplate.
constexpr const char* kStopwords[] = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours", "yourself",
    "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself", "it", "its", "itself",
    "they", "them", "their", "theirs", "themselves", "what", "which", "who", "whom", "this", "that",
    "these", "those", "am", "is", "are", "was", "were", "be", "been", "being", "have", "has", "had",
    "having", "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if", "or", "because", "as",
    "until", "while", "of", "at", "by", "for", "with", "about", "against", "between", "into", "through",
    "during", "before", "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off",
    "over", "under", "again", "further", "then", "once", "here", "there", "when", "where", "why", "how",
    "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not",
    "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will", "just", "don", "should",
    "now", "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "couldn", "didn", "doesn", "hadn",
    "hasn", "haven", "isn", "ma", "mightn", "mustn", "needn", "shan", "shouldn", "wasn", "weren", "won",
    "wouldn", "also", "get", "us", "per", "via", "welcome", "home", "page", "click", "contact", "login",
    "register", "site", "online", "best", "new", "please", "http", "https", "www", "com", "onion",
};

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace

const StopwordSet& default_stopwords() {
  static const StopwordSet set(std::begin(kStopwords), std::end(kStopwords));
  return set;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stopword file " + path.string());
  StopwordSet out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (auto& tok : tokenize(line)) out.insert(std::move(tok));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    bool digits_only = true;
    std::string tok;
    while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) {
      const unsigned char c = static_cast<unsigned char>(text[i]);
      if (c < '0' || c > '9') digits_only = false;
      tok.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
      ++i;
    }
    if (i > start && !digits_only) out.push_back(std::move(tok));
  }
  return out;
}

std::vector<std::string> content_tokens(std::string_view text, const StopwordSet& stopwords) {
  auto tokens = tokenize(text);
  std::erase_if(tokens, [&](const std::string& t) { return stopwords.contains(t); });
  return tokens;
}

std::vector<Candidate> extract_candidates(std::string_view text, const StopwordSet& stopwords, int ngram_max) {
  const auto tokens = content_tokens(text, stopwords);
  std::vector<Candidate> out;
  std::set<std::string> seen;
  const std::size_t max_n = static_cast<std::size_t>(std::max(1, ngram_max));
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    std::string surface;
    for (std::size_t n = 1; n <= max_n && pos + n <= tokens.size(); ++n) {
      if (n > 1) surface += ' ';
      surface += tokens[pos + n - 1];
      if (!seen.insert(surface).second) continue;
      out.push_back({surface, {tokens.begin() + static_cast<std::ptrdiff_t>(pos),
                               tokens.begin() + static_cast<std::ptrdiff_t>(pos + n)},
                     pos});
    }
  }
  return out;
}

}  // namespace onionlens::keywords
