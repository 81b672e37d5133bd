#pragma once

#include <string>
#include <vector>

namespace skbsem::util {

std::vector<std::string> split(const std::string& s, char delim);

// Shortest representation that round-trips an IEEE double ("%.17g"), used
// everywhere CSV bytes must be reproducible.
std::string format_double(double v);

}  // namespace skbsem::util
