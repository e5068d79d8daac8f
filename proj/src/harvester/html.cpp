#include "onionlens/harvester/html.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <utility>

namespace onionlens::harvester {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool iequals_prefix(std::string_view haystack, std::size_t pos, std::string_view needle) {
  if (pos + needle.size() > haystack.size()) return false;
  for (std::size_t i = 0; i < needle.size(); ++i) {
    if (lower(haystack[pos + i]) != needle[i]) return false;
  }
  return true;
}

std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from) {
  for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    if (iequals_prefix(haystack, i, needle)) return i;
  }
  return std::string_view::npos;
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

constexpr std::array<std::pair<std::string_view, std::string_view>, 29> kNamedEntities = {{
    {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "},
    {"copy", "\xC2\xA9"}, {"reg", "\xC2\xAE"}, {"euro", "\xE2\x82\xAC"}, {"pound", "\xC2\xA3"},
    {"mdash", "\xE2\x80\x94"}, {"ndash", "\xE2\x80\x93"}, {"hellip", "\xE2\x80\xA6"},
    {"trade", "\xE2\x84\xA2"}, {"times", "\xC3\x97"}, {"divide", "\xC3\xB7"}, {"deg", "\xC2\xB0"},
    {"plusmn", "\xC2\xB1"}, {"middot", "\xC2\xB7"}, {"bull", "\xE2\x80\xA2"}, {"laquo", "\xC2\xAB"},
    {"raquo", "\xC2\xBB"}, {"lsquo", "\xE2\x80\x98"}, {"rsquo", "\xE2\x80\x99"}, {"ldquo", "\xE2\x80\x9C"},
    {"rdquo", "\xE2\x80\x9D"}, {"yen", "\xC2\xA5"}, {"cent", "\xC2\xA2"}, {"sect", "\xC2\xA7"},
}};

// Elements that do not break words when they open or close.
constexpr std::array<std::string_view, 26> kInline = {
    "a", "abbr", "b", "bdi", "bdo", "cite", "code", "data", "dfn", "em", "font", "i", "kbd",
    "mark", "q", "s", "samp", "small", "span", "strike", "strong", "sub", "sup", "time", "u",
    "var"};

bool is_inline(std::string_view name) {
  return std::find(kInline.begin(), kInline.end(), name) != kInline.end();
}

struct Attribute {
  std::string name;
  std::string value;
};

struct Tag {
  std::string name;
  bool closing = false;
  std::vector<Attribute> attrs;

  const std::string* attr(std::string_view key) const {
    for (const auto& a : attrs) {
      if (a.name == key) return &a.value;
    }
    return nullptr;
  }
};

// Parses a tag starting at html[pos] == '<'. Returns the position after '>'.
std::size_t parse_tag(std::string_view html, std::size_t pos, Tag& tag) {
  std::size_t i = pos + 1;
  if (i < html.size() && html[i] == '/') {
    tag.closing = true;
    ++i;
  }
  while (i < html.size() && (std::isalnum(static_cast<unsigned char>(html[i])) || html[i] == '-' ||
                             html[i] == ':')) {
    tag.name.push_back(lower(html[i]));
    ++i;
  }
  while (i < html.size() && html[i] != '>') {
    if (is_space(html[i]) || html[i] == '/') {
      ++i;
      continue;
    }
    Attribute attr;
    while (i < html.size() && !is_space(html[i]) && html[i] != '=' && html[i] != '>' &&
           html[i] != '/') {
      attr.name.push_back(lower(html[i]));
      ++i;
    }
    while (i < html.size() && is_space(html[i])) ++i;
    if (i < html.size() && html[i] == '=') {
      ++i;
      while (i < html.size() && is_space(html[i])) ++i;
      if (i < html.size() && (html[i] == '"' || html[i] == '\'')) {
        const char quote = html[i++];
        const auto end = html.find(quote, i);
        const auto stop = end == std::string_view::npos ? html.size() : end;
        attr.value = decode_entities(html.substr(i, stop - i));
        i = end == std::string_view::npos ? html.size() : end + 1;
      } else {
        const auto start = i;
        while (i < html.size() && !is_space(html[i]) && html[i] != '>') ++i;
        attr.value = decode_entities(html.substr(start, i - start));
      }
    }
    if (!attr.name.empty()) tag.attrs.push_back(std::move(attr));
  }
  return i < html.size() ? i + 1 : html.size();
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool space = false;
  for (char c : s) {
    if (is_space(c)) {
      space = !out.empty();
    } else {
      if (space) out.push_back(' ');
      space = false;
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '&') {
      out.push_back(text[i]);
      continue;
    }
    const auto semi = text.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back('&');
      continue;
    }
    std::string_view name = text.substr(i + 1, semi - i - 1);
    bool decoded = false;
    if (name.size() > 1 && name[0] == '#') {
      std::uint32_t cp = 0;
      const bool hex = name[1] == 'x' || name[1] == 'X';
      auto digits = name.substr(hex ? 2 : 1);
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp, hex ? 16 : 10);
      if (ec == std::errc{} && ptr == digits.data() + digits.size() && !digits.empty()) {
        append_utf8(out, cp == 0xA0 ? 0x20 : cp);
        decoded = true;
      }
    } else {
      for (const auto& [key, value] : kNamedEntities) {
        if (name == key) {
          out += value;
          decoded = true;
          break;
        }
      }
    }
    if (decoded) {
      i = semi;
    } else {
      out.push_back('&');
    }
  }
  return out;
}

HtmlDocument parse_html(std::string_view html) {
  HtmlDocument doc;
  std::string body;
  std::vector<std::string> attr_text;

  std::size_t i = 0;
  while (i < html.size()) {
    const auto lt = html.find('<', i);
    const auto text_end = lt == std::string_view::npos ? html.size() : lt;
    if (text_end > i) body += decode_entities(html.substr(i, text_end - i));
    if (lt == std::string_view::npos) break;
    i = lt;

    if (html.substr(i).starts_with("<!--")) {
      const auto end = html.find("-->", i + 4);
      i = end == std::string_view::npos ? html.size() : end + 3;
      continue;
    }
    if (i + 1 < html.size() && (html[i + 1] == '!' || html[i + 1] == '?')) {
      const auto end = html.find('>', i);
      i = end == std::string_view::npos ? html.size() : end + 1;
      continue;
    }
    const bool tag_start = i + 1 < html.size() &&
                           (std::isalpha(static_cast<unsigned char>(html[i + 1])) || html[i + 1] == '/');
    if (!tag_start) {
      body.push_back('<');
      ++i;
      continue;
    }

    Tag tag;
    i = parse_tag(html, i, tag);
    if (tag.name.empty()) continue;
    if (!is_inline(tag.name)) body.push_back(' ');
    if (tag.closing) continue;

    if (tag.name == "script" || tag.name == "style") {
      const std::string close = "</" + tag.name;
      const auto end = ifind(html, close, i);
      if (end == std::string_view::npos) break;
      const auto gt = html.find('>', end);
      i = gt == std::string_view::npos ? html.size() : gt + 1;
      continue;
    }

    if (const auto* title = tag.attr("title"); title && !title->empty()) attr_text.push_back(*title);
    if (tag.name == "img") {
      if (const auto* alt = tag.attr("alt"); alt && !alt->empty()) attr_text.push_back(*alt);
      const auto* src = tag.attr("src");
      if (src == nullptr || src->empty()) src = tag.attr("data-src");
      if (src && !src->empty()) doc.image_srcs.push_back(*src);
    } else if (tag.name == "a" || tag.name == "area") {
      if (const auto* href = tag.attr("href"); href && !href->empty()) doc.link_hrefs.push_back(*href);
    } else if (tag.name == "base" && !doc.base_href) {
      if (const auto* href = tag.attr("href"); href && !href->empty()) doc.base_href = *href;
    }
  }

  for (const auto& extra : attr_text) {
    body.push_back(' ');
    body += extra;
  }
  doc.text = collapse_whitespace(body);
  return doc;
}

std::string extract_text(std::string_view html) { return parse_html(html).text; }

}  // namespace onionlens::harvester
