#include "hgnplan/cost.h"

#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hgnplan {

double Cost::value() const {
    if (infinite_)
        throw std::logic_error("value() requested from an infinite cost");
    return value_;
}

std::string Cost::str() const {
    if (infinite_)
        return "inf";
    std::ostringstream os;
    os << value_;
    return os.str();
}

std::ostream &operator<<(std::ostream &os, const Cost &c) {
    return os << c.str();
}

}  // namespace hgnplan
