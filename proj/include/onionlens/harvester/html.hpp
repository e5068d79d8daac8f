#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace onionlens::harvester {

/// What the crawler needs from one HTML document. References are returned
/// exactly as written (entity-decoded, unresolved).
struct HtmlDocument {
  std::string text;
  std::vector<std::string> image_srcs;
  std::vector<std::string> link_hrefs;
  std::optional<std::string> base_href;
};

/// Tolerant single-pass scan; never throws on malformed markup.
HtmlDocument parse_html(std::string_view html);

/// Visible text in document order with whitespace collapsed. Script, style
/// and comment content is dropped; title and alt attribute values are
/// appended after the body text.
std::string extract_text(std::string_view html);

std::string decode_entities(std::string_view text);

}  // namespace onionlens::harvester
