#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace onionlens::harvester {

/// An absolute http(s) URL in normalized form: lowercase scheme and host,
/// default port elided, dot segments removed, fragment dropped.
struct Url {
  std::string scheme;  // "http" or "https"
  std::string host;
  int port = 0;
  std::string path = "/";
  std::string query;  // without the leading '?'

  std::string to_string() const;
  std::string target() const;       // path + query, as sent in a request line
  std::string authority() const;    // host[:port] as sent in the Host header
  bool is_onion() const noexcept;

  friend bool operator==(const Url&, const Url&) = default;
};

/// Accepts only absolute http/https URLs.
std::optional<Url> parse_url(std::string_view text);

/// RFC 3986 reference resolution. Returns nullopt for references that do not
/// resolve to an http(s) URL (mailto:, javascript:, data:, ...).
std::optional<Url> resolve(const Url& base, std::string_view reference);

std::string normalize(std::string_view text);

bool host_is_onion(std::string_view host) noexcept;

std::string remove_dot_segments(std::string_view path);

}  // namespace onionlens::harvester
