#pragma once

namespace cslfi {
inline constexpr const char *version = "0.1.0";
}
