#include "onionlens/version.hpp"

namespace onionlens {

const char* version() noexcept { return ONIONLENS_VERSION; }

}  // namespace onionlens
