#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

#include "riskmech/errors.hpp"

namespace riskmech {

// Round to the nearest integer, ties to even. Independent of the fenv
// rounding mode so results are reproducible across build settings.
inline double round_half_even(double x) {
    const double f = std::floor(x);
    const double frac = x - f;
    if (frac > 0.5) return f + 1.0;
    if (frac < 0.5) return f;
    return std::fmod(f, 2.0) == 0.0 ? f : f + 1.0;
}

// Fixed-point money in minor units (1/100 of a currency unit). Sums,
// differences and ledger entries are exact; the only rounding boundary is
// from_value(), which rounds half-even to the minor unit.
class Money {
public:
    static constexpr std::int64_t kMinorPerUnit = 100;

    constexpr Money() = default;

    static constexpr Money from_minor(std::int64_t minor) { return Money(minor); }

    static Money from_value(double value) {
        if (!std::isfinite(value)) fail("invalid-money", "money value must be finite");
        const double minor = round_half_even(value * static_cast<double>(kMinorPerUnit));
        if (std::abs(minor) > 9.0e18) fail("invalid-money", "money value out of range");
        return Money(static_cast<std::int64_t>(minor));
    }

    constexpr std::int64_t minor() const { return minor_; }
    constexpr double value() const { return static_cast<double>(minor_) / kMinorPerUnit; }

    friend constexpr Money operator+(Money a, Money b) { return Money(a.minor_ + b.minor_); }
    friend constexpr Money operator-(Money a, Money b) { return Money(a.minor_ - b.minor_); }
    constexpr Money operator-() const { return Money(-minor_); }
    Money& operator+=(Money other) {
        minor_ += other.minor_;
        return *this;
    }
    friend constexpr auto operator<=>(Money, Money) = default;

private:
    constexpr explicit Money(std::int64_t minor) : minor_(minor) {}
    std::int64_t minor_ = 0;
};

}  // namespace riskmech
