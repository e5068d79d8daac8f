#include "onionlens/harvester/url.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <vector>

namespace onionlens::harvester {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

int default_port(std::string_view scheme) { return scheme == "https" ? 443 : 80; }

bool valid_scheme_char(char c, bool first) {
  const auto u = static_cast<unsigned char>(c);
  if (std::isalpha(u)) return true;
  return !first && (std::isdigit(u) || c == '+' || c == '-' || c == '.');
}

// Splits "scheme:" off a reference; empty when the reference is relative.
std::string_view scheme_of(std::string_view ref) {
  const auto colon = ref.find(':');
  if (colon == std::string_view::npos || colon == 0) return {};
  for (std::size_t i = 0; i < colon; ++i) {
    if (!valid_scheme_char(ref[i], i == 0)) return {};
  }
  return ref.substr(0, colon);
}

struct Parts {
  std::string_view path;
  std::string_view query;
  bool has_query = false;
};

Parts split_path_query(std::string_view s) {
  Parts p;
  if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
  if (auto q = s.find('?'); q != std::string_view::npos) {
    p.path = s.substr(0, q);
    p.query = s.substr(q + 1);
    p.has_query = true;
  } else {
    p.path = s;
  }
  return p;
}

// Parses "//authority/path?query" (after the scheme) into url.
bool parse_authority_and_rest(std::string_view rest, Url& url) {
  if (!rest.starts_with("//")) return false;
  rest.remove_prefix(2);
  const auto end = rest.find_first_of("/?#");
  std::string_view authority = rest.substr(0, end);
  std::string_view tail = end == std::string_view::npos ? std::string_view{} : rest.substr(end);

  if (auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
  std::string_view host = authority;
  int port = default_port(url.scheme);
  if (!authority.empty() && authority.front() == '[') {
    return false;  // IPv6 literals are not crawled
  }
  if (auto colon = authority.rfind(':'); colon != std::string_view::npos) {
    host = authority.substr(0, colon);
    auto digits = authority.substr(colon + 1);
    if (!digits.empty()) {
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
      if (ec != std::errc{} || ptr != digits.data() + digits.size() || port <= 0 || port > 65535) {
        return false;
      }
    }
  }
  if (host.empty()) return false;
  url.host = lower(host);
  if (url.host.back() == '.') url.host.pop_back();
  if (url.host.empty()) return false;
  url.port = port;

  auto parts = split_path_query(tail);
  url.path = remove_dot_segments(parts.path.empty() ? "/" : parts.path);
  url.query = std::string(parts.query);
  return true;
}

std::string merge_paths(const Url& base, std::string_view ref_path) {
  const auto slash = base.path.rfind('/');
  if (slash == std::string::npos) return "/" + std::string(ref_path);
  return base.path.substr(0, slash + 1) + std::string(ref_path);
}

}  // namespace

std::string remove_dot_segments(std::string_view path) {
  std::vector<std::string_view> out;
  const bool absolute = path.starts_with('/');
  std::size_t pos = absolute ? 1 : 0;
  bool trailing_slash = false;
  while (pos <= path.size()) {
    auto next = path.find('/', pos);
    const bool last = next == std::string_view::npos;
    std::string_view seg = path.substr(pos, last ? std::string_view::npos : next - pos);
    trailing_slash = false;
    if (seg == ".") {
      trailing_slash = true;
    } else if (seg == "..") {
      if (!out.empty()) out.pop_back();
      trailing_slash = true;
    } else {
      out.push_back(seg);
    }
    if (last) break;
    pos = next + 1;
  }
  std::string result = absolute ? "/" : "";
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i > 0) result += '/';
    result += out[i];
  }
  if (trailing_slash && !result.ends_with('/')) result += '/';
  if (result.empty()) result = "/";
  return result;
}

std::string Url::authority() const {
  if (port == default_port(scheme)) return host;
  return host + ":" + std::to_string(port);
}

std::string Url::target() const { return query.empty() ? path : path + "?" + query; }

std::string Url::to_string() const { return scheme + "://" + authority() + target(); }

bool host_is_onion(std::string_view host) noexcept {
  return host.size() > 6 && host.ends_with(".onion");
}

bool Url::is_onion() const noexcept { return host_is_onion(host); }

std::optional<Url> parse_url(std::string_view text) {
  text = trim(text);
  const auto scheme = lower(scheme_of(text));
  if (scheme != "http" && scheme != "https") return std::nullopt;
  Url url;
  url.scheme = scheme;
  if (!parse_authority_and_rest(text.substr(scheme.size() + 1), url)) return std::nullopt;
  return url;
}

std::optional<Url> resolve(const Url& base, std::string_view reference) {
  reference = trim(reference);
  if (!scheme_of(reference).empty()) return parse_url(reference);

  Url url;
  url.scheme = base.scheme;
  if (reference.starts_with("//")) {
    if (!parse_authority_and_rest(reference, url)) return std::nullopt;
    return url;
  }

  url.host = base.host;
  url.port = base.port;
  auto parts = split_path_query(reference);
  if (parts.path.empty()) {
    url.path = base.path;
    url.query = parts.has_query ? std::string(parts.query) : base.query;
  } else {
    url.path = parts.path.starts_with('/') ? remove_dot_segments(parts.path)
                                           : remove_dot_segments(merge_paths(base, parts.path));
    url.query = std::string(parts.query);
  }
  return url;
}

std::string normalize(std::string_view text) {
  auto url = parse_url(text);
  return url ? url->to_string() : std::string(text);
}

}  // namespace onionlens::harvester
