#pragma once

namespace cfbwp {

inline constexpr const char* kVersion = "1.0.0";

}
