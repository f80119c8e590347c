#pragma once

#include <string>

namespace carnot {

// Shortest decimal that round-trips, '.' separator, independent of locale.
std::string format_double(double v);

}  // namespace carnot
