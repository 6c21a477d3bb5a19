#pragma once

namespace tesim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tesim
