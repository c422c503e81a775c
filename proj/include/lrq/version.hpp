#pragma once

namespace lrq {
inline constexpr const char* kVersion = "0.1.0";
}
