#pragma once

#include <compare>
#include <iosfwd>
#include <string>

namespace hgnplan {

// Non-negative cost extended with a distinguished infinity.
class Cost {
public:
    constexpr Cost() = default;
    constexpr explicit Cost(double value) : value_(value) {}

    static constexpr Cost infinity() {
        Cost c;
        c.infinite_ = true;
        return c;
    }

    constexpr bool is_infinite() const { return infinite_; }
    constexpr bool is_finite() const { return !infinite_; }

    // Precondition: is_finite().
    double value() const;

    friend constexpr bool operator==(const Cost &a, const Cost &b) {
        if (a.infinite_ || b.infinite_)
            return a.infinite_ == b.infinite_;
        return a.value_ == b.value_;
    }
    friend constexpr std::partial_ordering operator<=>(const Cost &a, const Cost &b) {
        if (a.infinite_ && b.infinite_)
            return std::partial_ordering::equivalent;
        if (a.infinite_)
            return std::partial_ordering::greater;
        if (b.infinite_)
            return std::partial_ordering::less;
        return a.value_ <=> b.value_;
    }

    friend constexpr Cost operator+(const Cost &a, const Cost &b) {
        if (a.infinite_ || b.infinite_)
            return infinity();
        return Cost(a.value_ + b.value_);
    }
    Cost &operator+=(const Cost &o) { return *this = *this + o; }

    std::string str() const;

private:
    double value_ = 0.0;
    bool infinite_ = false;
};

std::ostream &operator<<(std::ostream &os, const Cost &c);

}  // namespace hgnplan
