#include "ctsched/csv.hpp"

#include <cmath>
#include <cstdio>

namespace ctsched {

std::string csv_number(double value) {
    if (std::isnan(value)) return {};
    if (value == 0.0) return "0";  // merge signed zeros
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.12g", value);
    return buffer;
}

}  // namespace ctsched
