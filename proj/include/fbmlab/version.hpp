#pragma once

namespace fbmlab {

inline constexpr const char* version_string = "fbmlab 0.1.0";

}  // namespace fbmlab
