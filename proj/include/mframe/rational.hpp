#ifndef MFRAME_RATIONAL_HPP
#define MFRAME_RATIONAL_HPP

#include <cstdint>
#include <numeric>
#include <string>

#include "mframe/error.hpp"

namespace mframe {

// Exact rational on 64-bit integers, always in lowest terms with a positive
// denominator. Arithmetic goes through 128-bit intermediates and throws
// OverflowError instead of wrapping; the expressions this engine handles keep
// coefficients far below that range.
class Rational {
  public:
    constexpr Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {}  // NOLINT: implicit by design
    Rational(long long n, long long d) : num_(n), den_(d) { normalize(); }

    long long num() const { return num_; }
    long long den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool is_one() const { return num_ == 1 && den_ == 1; }
    bool is_integer() const { return den_ == 1; }
    int sign() const { return num_ > 0 ? 1 : num_ < 0 ? -1 : 0; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        __int128 n = i128(a.num_) * b.den_ + i128(b.num_) * a.den_;
        __int128 d = i128(a.den_) * b.den_;
        return make(n, d);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        __int128 n = i128(a.num_) * b.den_ - i128(b.num_) * a.den_;
        __int128 d = i128(a.den_) * b.den_;
        return make(n, d);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw DomainError("rational division by zero");
        return make(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
    }
    Rational operator-() const {
        Rational r;
        r.num_ = -num_;
        r.den_ = den_;
        return r;
    }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    Rational pow(long long e) const {
        if (e == 0) return Rational(1);
        Rational base = e > 0 ? *this : Rational(1) / *this;
        long long n = e > 0 ? e : -e;
        Rational r(1);
        while (n > 0) {
            if (n & 1) r *= base;
            base *= base;
            n >>= 1;
        }
        return r;
    }

    // Exact q-th root if one exists (q >= 1).
    bool nth_root(long long q, Rational& out) const;

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
    }

    std::string str() const {
        return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
    }

  private:
    using i128 = __int128;
    static Rational make(i128 n, i128 d) {
        if (d == 0) throw DomainError("rational with zero denominator");
        if (d < 0) {
            n = -n;
            d = -d;
        }
        i128 g = gcd128(n < 0 ? -n : n, d);
        if (g > 1) {
            n /= g;
            d /= g;
        }
        if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
            throw OverflowError("rational arithmetic overflow");
        Rational r;
        r.num_ = static_cast<long long>(n);
        r.den_ = static_cast<long long>(d);
        return r;
    }
    static i128 gcd128(i128 a, i128 b) {
        while (b != 0) {
            i128 t = a % b;
            a = b;
            b = t;
        }
        return a == 0 ? 1 : a;
    }
    void normalize() { *this = make(num_, den_); }

    long long num_;
    long long den_;
};

inline bool Rational::nth_root(long long q, Rational& out) const {
    if (q == 1) {
        out = *this;
        return true;
    }
    if (num_ < 0 && q % 2 == 0) return false;
    auto iroot = [](long long v, long long q) -> long long {
        if (v == 0) return 0;
        long long lo = 1, hi = 1;
        while (true) {
            __int128 p = 1;
            for (long long i = 0; i < q && p <= v; ++i) p *= hi;
            if (p >= v) break;
            hi *= 2;
        }
        while (lo < hi) {
            long long mid = lo + (hi - lo) / 2;
            __int128 p = 1;
            bool over = false;
            for (long long i = 0; i < q; ++i) {
                p *= mid;
                if (p > v) {
                    over = true;
                    break;
                }
            }
            if (over || p >= v)
                hi = mid;
            else
                lo = mid + 1;
        }
        return lo;
    };
    long long an = num_ < 0 ? -num_ : num_;
    long long rn = iroot(an, q), rd = iroot(den_, q);
    __int128 pn = 1, pd = 1;
    for (long long i = 0; i < q; ++i) {
        pn *= rn;
        pd *= rd;
    }
    if (pn != an || pd != den_) return false;
    out = Rational(num_ < 0 ? -rn : rn, rd);
    return true;
}

}  // namespace mframe

#endif
