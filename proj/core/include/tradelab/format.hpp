#pragma once

#include <string>

namespace tradelab {

// Shortest representation that round-trips; "nan"/"inf" for non-finite.
std::string format_double(double v);

}  // namespace tradelab
