#pragma once

namespace rqc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rqc
