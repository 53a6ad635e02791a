#pragma once

#include <vector>

#include "acim/real.hpp"

namespace acim {

struct StepFunction;

// Continuous piecewise-linear function with rational knots, defined on
// [xs.front(), xs.back()]. All operations are exact.
struct PLFunction {
    std::vector<Rational> xs;  // strictly increasing, size >= 2
    std::vector<Rational> ys;  // same size as xs

    PLFunction() = default;
    PLFunction(std::vector<Rational> xs_, std::vector<Rational> ys_);

    static PLFunction constant(const Rational& a, const Rational& b, const Rational& v);
    static PLFunction identity(const Rational& a = 0, const Rational& b = 1);
    // Line c1*x + c0 on [a, b].
    static PLFunction affine(const Rational& a, const Rational& b, const Rational& c1, const Rational& c0);

    const Rational& x_lo() const { return xs.front(); }
    const Rational& x_hi() const { return xs.back(); }

    Rational operator()(const Rational& x) const;  // x must lie in the domain
    double eval_double(double x) const;            // clamps to the domain

    Rational min_value() const;
    Rational max_value() const;
    bool nondecreasing() const;
    bool nonincreasing() const;
    bool strictly_increasing() const;
    bool strictly_decreasing() const;

    // Inverse of a strictly monotone function, returned with increasing knots.
    PLFunction inverse() const;

    PLFunction restrict(const Rational& a, const Rational& b) const;
    PLFunction with_knot(const Rational& x) const;
    PLFunction with_knots(const std::vector<Rational>& ks) const;
    // Drops interior knots where the slope does not change.
    PLFunction simplified() const;

    StepFunction derivative() const;

    // ca*f + cb*g on a common domain.
    static PLFunction combine(const Rational& ca, const PLFunction& f,
                              const Rational& cb, const PLFunction& g);
    // f(g(x)); g's values must stay inside f's domain. g need not be monotone.
    static PLFunction compose(const PLFunction& f, const PLFunction& g);
    static Rational sup_abs_difference(const PLFunction& f, const PLFunction& g);
};

// Right-continuous step function: values[i] on [knots[i], knots[i+1]), with
// the last cell closed. Knots are rational and strictly increasing.
struct StepFunction {
    std::vector<Rational> knots;   // size = values.size() + 1
    std::vector<Rational> values;

    StepFunction() = default;
    StepFunction(std::vector<Rational> knots_, std::vector<Rational> values_);

    static StepFunction constant(const Rational& a, const Rational& b, const Rational& v);

    const Rational& x_lo() const { return knots.front(); }
    const Rational& x_hi() const { return knots.back(); }
    size_t cells() const { return values.size(); }

    Rational operator()(const Rational& x) const;
    double eval_double(double x) const;
    size_t cell_index(const Rational& x) const;

    Rational integral() const;
    PLFunction antiderivative() const;

    // Same function over a finer knot set (must contain the current knots).
    StepFunction refined_to(const std::vector<Rational>& finer) const;
    // Joins adjacent cells with equal values.
    StepFunction merged() const;
    StepFunction scaled(const Rational& c) const;

    static std::vector<Rational> merge_knots(const std::vector<Rational>& a,
                                             const std::vector<Rational>& b);
    static StepFunction add(const StepFunction& f, const StepFunction& g);
    static StepFunction subtract(const StepFunction& f, const StepFunction& g);
    static StepFunction multiply(const StepFunction& f, const StepFunction& g);
    static Rational sup_abs(const StepFunction& f);
};

// Sorts, removes duplicates.
std::vector<Rational> sorted_unique(std::vector<Rational> v);

}  // namespace acim
