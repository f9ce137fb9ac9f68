#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace jf {

/// Exact rational with 64-bit numerator/denominator, always reduced,
/// denominator > 0. Overflow in intermediates is detected via __int128
/// and throws; desk-scale symbolic work never gets near the limits.
class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {}
    Rational(long long n, long long d) : num_(n), den_(d) { normalize(); }

    long long num() const { return num_; }
    long long den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool is_one() const { return num_ == 1 && den_ == 1; }
    bool is_integer() const { return den_ == 1; }

    double to_double() const { return double(num_) / double(den_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.den_ + i128(b.num_) * a.den_,
                    i128(a.den_) * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.den_ - i128(b.num_) * a.den_,
                    i128(a.den_) * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw std::domain_error("rational division by zero");
        return make(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
    }
    Rational operator-() const { Rational r; r.num_ = -num_; r.den_ = den_; return r; }

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
    }

    Rational inverse() const {
        if (num_ == 0) throw std::domain_error("inverse of zero");
        return Rational(den_, num_);
    }

    Rational pow(int e) const {
        Rational r(1), b = *this;
        bool inv = e < 0;
        unsigned n = inv ? unsigned(-(long long)e) : unsigned(e);
        while (n) {
            if (n & 1) r *= b;
            b *= b;
            n >>= 1;
        }
        return inv ? r.inverse() : r;
    }

    std::string str() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

private:
    using i128 = __int128;

    static Rational make(i128 n, i128 d) {
        if (d == 0) throw std::domain_error("zero denominator");
        if (d < 0) { n = -n; d = -d; }
        i128 g = gcd128(n < 0 ? -n : n, d);
        if (g > 1) { n /= g; d /= g; }
        if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
            throw std::overflow_error("rational overflow");
        Rational r;
        r.num_ = (long long)n;
        r.den_ = (long long)d;
        return r;
    }

    static i128 gcd128(i128 a, i128 b) {
        while (b) { i128 t = a % b; a = b; b = t; }
        return a == 0 ? 1 : a;
    }

    void normalize() {
        Rational r = make(num_, den_);
        num_ = r.num_;
        den_ = r.den_;
    }

    long long num_, den_;
};

}  // namespace jf
