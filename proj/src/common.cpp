#include "krvi/common.hpp"

#include <cstdio>

namespace krvi {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_unit_cube(const Point& z) {
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (!(z[i] >= 0.0 && z[i] <= 1.0)) {
            throw InvalidInput("point coordinate " + std::to_string(i) + " = " +
                               std::to_string(z[i]) + " outside [0,1]");
        }
    }
}

}  // namespace krvi
