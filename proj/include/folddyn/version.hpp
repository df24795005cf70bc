#pragma once

namespace folddyn {
inline constexpr const char* version = "0.1.0";
}
