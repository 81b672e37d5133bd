#include "skbsem/util.hpp"

#include <cstdio>
#include <sstream>

namespace skbsem::util {

std::vector<std::string> split(const std::string& s, char delim) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string field;
    while (std::getline(ss, field, delim)) out.push_back(field);
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace skbsem::util
