#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "onionlens/curation/decode.hpp"

namespace onionlens::curation {
namespace {

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  bool has(std::size_t n) const { return pos_ + n <= data_.size(); }
  std::uint8_t u8() { return data_[pos_++]; }
  int u16() {
    const int lo = data_[pos_];
    const int hi = data_[pos_ + 1];
    pos_ += 2;
    return lo | (hi << 8);
  }
  void skip(std::size_t n) { pos_ += n; }
  std::span<const std::uint8_t> take(std::size_t n) {
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

using Palette = std::vector<std::array<std::uint8_t, 3>>;

bool read_palette(ByteReader& in, int size_bits, Palette& out) {
  const std::size_t n = std::size_t{1} << (size_bits + 1);
  if (!in.has(3 * n)) return false;
  out.resize(n);
  for (auto& c : out) {
    c[0] = in.u8();
    c[1] = in.u8();
    c[2] = in.u8();
  }
  return true;
}

// Concatenates data sub-blocks up to the zero-length terminator.
bool read_sub_blocks(ByteReader& in, std::vector<std::uint8_t>* out) {
  for (;;) {
    if (!in.has(1)) return false;
    const std::uint8_t len = in.u8();
    if (len == 0) return true;
    if (!in.has(len)) return false;
    auto block = in.take(len);
    if (out != nullptr) out->insert(out->end(), block.begin(), block.end());
  }
}

// Variable-width LZW as used by GIF. Returns false if the stream ends
// before `count` indices were produced.
bool lzw_decode(std::span<const std::uint8_t> data, int min_code_size, std::size_t count,
                std::vector<std::uint8_t>& out) {
  if (min_code_size < 2 || min_code_size > 8) return false;
  constexpr int kMaxCodes = 4096;
  const int clear = 1 << min_code_size;
  const int eoi = clear + 1;

  std::array<std::uint16_t, kMaxCodes> prefix{};
  std::array<std::uint8_t, kMaxCodes> suffix{};
  std::array<std::uint8_t, kMaxCodes> first{};
  std::vector<std::uint8_t> stack;
  stack.reserve(kMaxCodes);
  for (int i = 0; i < clear; ++i) {
    suffix[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
    first[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  }

  int code_size = min_code_size + 1;
  int next_code = eoi + 1;
  int prev = -1;
  std::uint32_t bits = 0;
  int nbits = 0;
  std::size_t pos = 0;
  out.clear();
  out.reserve(count);

  while (out.size() < count) {
    while (nbits < code_size) {
      if (pos >= data.size()) return false;
      bits |= static_cast<std::uint32_t>(data[pos++]) << nbits;
      nbits += 8;
    }
    const int code = static_cast<int>(bits & ((1u << code_size) - 1));
    bits >>= code_size;
    nbits -= code_size;

    if (code == clear) {
      code_size = min_code_size + 1;
      next_code = eoi + 1;
      prev = -1;
      continue;
    }
    if (code == eoi) return out.size() >= count;

    int cur = code;
    stack.clear();
    if (prev < 0) {
      if (code >= clear) return false;
      out.push_back(static_cast<std::uint8_t>(code));
      prev = code;
      continue;
    }
    if (code > next_code || (code == next_code && next_code >= kMaxCodes)) return false;
    if (code == next_code) {
      stack.push_back(first[static_cast<std::size_t>(prev)]);
      cur = prev;
    }
    while (cur >= clear) {
      stack.push_back(suffix[static_cast<std::size_t>(cur)]);
      cur = prefix[static_cast<std::size_t>(cur)];
    }
    stack.push_back(static_cast<std::uint8_t>(cur));
    for (auto it = stack.rbegin(); it != stack.rend() && out.size() < count; ++it) out.push_back(*it);

    if (next_code < kMaxCodes) {
      prefix[static_cast<std::size_t>(next_code)] = static_cast<std::uint16_t>(prev);
      suffix[static_cast<std::size_t>(next_code)] = static_cast<std::uint8_t>(cur);
      first[static_cast<std::size_t>(next_code)] = first[static_cast<std::size_t>(prev)];
      ++next_code;
      if (next_code == (1 << code_size) && code_size < 12) ++code_size;
    }
    prev = code;
  }
  return true;
}

}  // namespace

std::optional<DecodedImage> decode_gif(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  if (!in.has(13)) return std::nullopt;
  auto sig = in.take(6);
  if (sig[0] != 'G' || sig[1] != 'I' || sig[2] != 'F' || sig[3] != '8' || (sig[4] != '7' && sig[4] != '9') ||
      sig[5] != 'a') {
    return std::nullopt;
  }
  const int screen_w = in.u16();
  const int screen_h = in.u16();
  const std::uint8_t packed = in.u8();
  const std::uint8_t background = in.u8();
  in.skip(1);  // pixel aspect ratio

  Palette global;
  if ((packed & 0x80) != 0 && !read_palette(in, packed & 0x07, global)) return std::nullopt;

  int transparent = -1;
  for (;;) {
    if (!in.has(1)) return std::nullopt;
    const std::uint8_t block = in.u8();
    if (block == 0x3B) return std::nullopt;  // trailer before any image
    if (block == 0x21) {
      if (!in.has(1)) return std::nullopt;
      const std::uint8_t label = in.u8();
      if (label == 0xF9 && in.has(6)) {
        const std::uint8_t len = in.u8();
        if (len == 4) {
          const std::uint8_t flags = in.u8();
          in.skip(2);
          const std::uint8_t index = in.u8();
          if ((flags & 0x01) != 0) transparent = index;
        } else {
          in.skip(len);
        }
      }
      if (!read_sub_blocks(in, nullptr)) return std::nullopt;
      continue;
    }
    if (block != 0x2C) return std::nullopt;

    if (!in.has(9)) return std::nullopt;
    const int left = in.u16();
    const int top = in.u16();
    const int w = in.u16();
    const int h = in.u16();
    const std::uint8_t flags = in.u8();
    Palette local;
    if ((flags & 0x80) != 0 && !read_palette(in, flags & 0x07, local)) return std::nullopt;
    const Palette& palette = local.empty() ? global : local;
    if (palette.empty() || w <= 0 || h <= 0) return std::nullopt;
    const bool interlaced = (flags & 0x40) != 0;

    if (!in.has(1)) return std::nullopt;
    const int min_code_size = in.u8();
    std::vector<std::uint8_t> data;
    if (!read_sub_blocks(in, &data)) return std::nullopt;

    std::vector<std::uint8_t> indices;
    const auto count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (!lzw_decode(data, min_code_size, count, indices)) return std::nullopt;

    const int cw = std::max(screen_w, 1);
    const int ch = std::max(screen_h, 1);
    DecodedImage img(cw, ch, 3);
    if (!global.empty() && background < global.size()) {
      const auto& bg = global[background];
      for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
        img.pixels[i] = bg[0];
        img.pixels[i + 1] = bg[1];
        img.pixels[i + 2] = bg[2];
      }
    }

    std::vector<int> row_order;
    row_order.reserve(static_cast<std::size_t>(h));
    if (interlaced) {
      for (int r = 0; r < h; r += 8) row_order.push_back(r);
      for (int r = 4; r < h; r += 8) row_order.push_back(r);
      for (int r = 2; r < h; r += 4) row_order.push_back(r);
      for (int r = 1; r < h; r += 2) row_order.push_back(r);
    } else {
      for (int r = 0; r < h; ++r) row_order.push_back(r);
    }

    for (int i = 0; i < h; ++i) {
      const int y = top + row_order[static_cast<std::size_t>(i)];
      if (y >= ch) continue;
      for (int x = 0; x < w; ++x) {
        const int cx = left + x;
        if (cx >= cw) continue;
        const int index = indices[static_cast<std::size_t>(i) * w + x];
        if (index == transparent || static_cast<std::size_t>(index) >= palette.size()) continue;
        const auto& c = palette[static_cast<std::size_t>(index)];
        img.at(cx, y, 0) = c[0];
        img.at(cx, y, 1) = c[1];
        img.at(cx, y, 2) = c[2];
      }
    }
    return img;
  }
}

}  // namespace onionlens::curation
