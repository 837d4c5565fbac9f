#pragma once

namespace hetcorr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hetcorr
