#pragma once

namespace psr {
inline constexpr const char* version = "1.0.0";
}
