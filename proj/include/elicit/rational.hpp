#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace elicit {

// Exact rational over int64, always normalized: gcd-reduced, denominator > 0.
// Quantiles over word counts stay small, so int64 never overflows here.
class Rational {
public:
    Rational() = default;
    Rational(std::int64_t value) : num_(value) {}  // NOLINT: implicit by design
    Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
        if (den_ == 0) throw std::invalid_argument("Rational: zero denominator");
        normalize();
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    // Nearest integer, ties rounded away from zero.
    std::int64_t round_nearest() const {
        std::int64_t q = num_ / den_;
        std::int64_t r = num_ % den_;
        if (r == 0) return q;
        if (2 * std::abs(r) >= den_) return q + (num_ < 0 ? -1 : 1);
        return q;
    }

    std::string to_string() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return {a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_};
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return {a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_};
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return {a.num_ * b.num_, a.den_ * b.den_};
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        return {a.num_ * b.den_, a.den_ * b.num_};
    }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator<(const Rational& a, const Rational& b) {
        return a.num_ * b.den_ < b.num_ * a.den_;
    }
    friend bool operator<=(const Rational& a, const Rational& b) { return a == b || a < b; }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator>=(const Rational& a, const Rational& b) { return b <= a; }

private:
    void normalize() {
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) { num_ /= g; den_ /= g; }
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

}  // namespace elicit
