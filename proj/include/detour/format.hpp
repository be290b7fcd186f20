#pragma once

#include <string>

namespace detour {

// Shortest decimal text that parses back to the same double. Used for every
// real number written to CSV so that traces compare byte for byte.
std::string format_double(double v);

}  // namespace detour
