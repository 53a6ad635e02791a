#pragma once

#include <gmpxx.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

#include "acim/errors.hpp"

namespace acim {

using Rational = mpq_class;

// Canonicalized rational from integers.
inline Rational rat(long num, long den = 1) {
    if (den == 0) throw ValidationError("rational with zero denominator");
    Rational q(num, den);
    q.canonicalize();
    return q;
}

// Accepts "p/q", integers, and plain decimals ("0.375", "-2.5e-3" is not
// supported; exponents never appear in our inputs).
inline Rational parse_rational(const std::string& text) {
    if (text.empty()) throw ValidationError("empty rational literal");
    auto bad = [&]() { throw ValidationError("malformed rational literal: '" + text + "'"); };
    std::string s = text;
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        Rational q;
        if (q.set_str(s, 10) != 0) bad();
        if (q.get_den() == 0) bad();
        q.canonicalize();
        return q;
    }
    auto dot = s.find('.');
    if (dot == std::string::npos) {
        Rational q;
        if (q.set_str(s, 10) != 0) bad();
        return q;
    }
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    size_t frac_len = s.size() - dot - 1;
    if (digits.empty() || digits == "-" || digits == "+") bad();
    for (size_t i = 0; i < digits.size(); ++i) {
        char c = digits[i];
        if (!(std::isdigit(static_cast<unsigned char>(c)) || (i == 0 && (c == '-' || c == '+')))) bad();
    }
    Rational num;
    if (num.set_str(digits, 10) != 0) bad();
    Rational den(1);
    for (size_t i = 0; i < frac_len; ++i) den *= 10;
    Rational q = num / den;
    q.canonicalize();
    return q;
}

inline std::string to_string(const Rational& q) {
    return q.get_str();
}

inline double to_double(const Rational& q) {
    return q.get_d();
}

// A number that remembers whether it is exactly known. Arithmetic stays
// rational while both operands are exact and falls back to double otherwise.
// Comparisons between two exact values are decided rationally.
class Real {
public:
    Real() : val_(0.0), rat_(0), exact_(true) {}
    Real(int v) : val_(static_cast<double>(v)), rat_(v), exact_(true) {}
    Real(long v) : val_(static_cast<double>(v)), rat_(static_cast<long>(v)), exact_(true) {}
    Real(const Rational& q) : val_(q.get_d()), rat_(q), exact_(true) {}

    static Real approx(double v) {
        Real r;
        r.val_ = v;
        r.rat_ = 0;
        r.exact_ = false;
        return r;
    }

    bool exact() const { return exact_; }
    double value() const { return val_; }

    const Rational& rational() const {
        if (!exact_) throw StructureError("rational() on an inexact value");
        return rat_;
    }

    Real operator-() const {
        if (exact_) return Real(Rational(-rat_));
        return approx(-val_);
    }

    friend Real operator+(const Real& a, const Real& b) {
        if (a.exact_ && b.exact_) return Real(Rational(a.rat_ + b.rat_));
        return approx(a.val_ + b.val_);
    }
    friend Real operator-(const Real& a, const Real& b) {
        if (a.exact_ && b.exact_) return Real(Rational(a.rat_ - b.rat_));
        return approx(a.val_ - b.val_);
    }
    friend Real operator*(const Real& a, const Real& b) {
        if (a.exact_ && b.exact_) return Real(Rational(a.rat_ * b.rat_));
        return approx(a.val_ * b.val_);
    }
    friend Real operator/(const Real& a, const Real& b) {
        if (b.is_zero()) throw ValidationError("division by zero");
        if (a.exact_ && b.exact_) return Real(Rational(a.rat_ / b.rat_));
        return approx(a.val_ / b.val_);
    }

    bool is_zero() const { return exact_ ? sgn(rat_) == 0 : val_ == 0.0; }

    // Three-way comparison; exact pairs are compared without rounding.
    friend int compare(const Real& a, const Real& b) {
        if (a.exact_ && b.exact_) return cmp(a.rat_, b.rat_);
        if (a.val_ < b.val_) return -1;
        if (a.val_ > b.val_) return 1;
        return 0;
    }

    friend bool operator<(const Real& a, const Real& b) { return compare(a, b) < 0; }
    friend bool operator>(const Real& a, const Real& b) { return compare(a, b) > 0; }
    friend bool operator<=(const Real& a, const Real& b) { return compare(a, b) <= 0; }
    friend bool operator>=(const Real& a, const Real& b) { return compare(a, b) >= 0; }
    friend bool operator==(const Real& a, const Real& b) { return compare(a, b) == 0; }
    friend bool operator!=(const Real& a, const Real& b) { return compare(a, b) != 0; }

private:
    double val_;
    Rational rat_;
    bool exact_;
};

inline Real abs(const Real& x) { return x < Real(0) ? -x : x; }
inline const Real& min(const Real& a, const Real& b) { return b < a ? b : a; }
inline const Real& max(const Real& a, const Real& b) { return a < b ? b : a; }

inline std::string to_string(const Real& x) {
    if (x.exact()) return x.rational().get_str();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x.value());
    return buf;
}

// Exact when the text carries a slash or a finite decimal; both parse to a
// rational without loss.
inline Real parse_real(const std::string& text) {
    return Real(parse_rational(text));
}

}  // namespace acim
