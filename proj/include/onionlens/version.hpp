#pragma once

namespace onionlens {

/// Library version, e.g. "0.1.0".
const char* version() noexcept;

}  // namespace onionlens
