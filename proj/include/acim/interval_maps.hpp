#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "acim/pl.hpp"
#include "acim/real.hpp"

namespace acim {

struct Interval {
    Real lo, hi;
    Interval() : lo(0), hi(1) {}
    Interval(Real lo_, Real hi_);
    double length_double() const { return hi.value() - lo.value(); }
    bool contains(const Real& x) const { return lo <= x && x <= hi; }
};

enum class Monotonicity { Increasing, Decreasing };

// slope*x + intercept
struct AffineForm {
    Real slope, intercept;
};

// a*x^2 + b*x + c, strictly monotone on the branch domain
struct QuadraticForm {
    Real a, b, c;
};

// A strictly monotone function given by paired forward/inverse callables.
// `tolerance` bounds |inverse(forward(x)) - x| on the branch domain.
struct MonotoneClosureForm {
    std::function<double(double)> forward;
    std::function<double(double)> inverse;
    double tolerance = 1e-12;
};

class BranchForm;

// outer(inner(x))
struct CompositeForm {
    std::shared_ptr<BranchForm> outer, inner;
};

class BranchForm {
public:
    static BranchForm affine(const Real& slope, const Real& intercept);
    static BranchForm quadratic(const Real& a, const Real& b, const Real& c);
    static BranchForm closure(std::function<double(double)> forward,
                              std::function<double(double)> inverse,
                              double tolerance = 1e-12);
    static BranchForm composite(BranchForm outer, BranchForm inner);

    Real eval(const Real& x) const;
    double eval(double x) const;

    // Unique solution of eval(x) = y for x in [lo, hi]. The caller guarantees
    // y lies in the image of [lo, hi].
    Real invert(const Real& y, const Real& lo, const Real& hi) const;

    // All coefficients exact rationals (recursively for composites).
    bool exact() const;
    // Inversion error bound: 0 for closed forms, declared for closures.
    double tolerance() const;

    const AffineForm* as_affine() const { return std::get_if<AffineForm>(&v_); }
    const QuadraticForm* as_quadratic() const { return std::get_if<QuadraticForm>(&v_); }
    const MonotoneClosureForm* as_closure() const { return std::get_if<MonotoneClosureForm>(&v_); }
    const CompositeForm* as_composite() const { return std::get_if<CompositeForm>(&v_); }
    std::string kind() const;

private:
    std::variant<AffineForm, QuadraticForm, MonotoneClosureForm, CompositeForm> v_;
};

struct Branch {
    Interval domain;
    BranchForm form;
    Monotonicity monotonicity;
    Real value_at_lo, value_at_hi;  // cached endpoint values

    Branch(Interval domain_, BranchForm form_, Monotonicity mono);

    // [min, max] of the endpoint values.
    Interval image() const;
    Real eval(const Real& x) const;
    double eval(double x) const;
};

// Convenience constructor that infers monotonicity from the form.
Branch make_branch(Interval domain, BranchForm form);

Real branch_inverse(const Branch& b, const Real& y);

// Inverse clamped to the branch domain: points below/above the branch image
// map to the domain endpoint the branch assumes its extreme value at.
Real extended_inverse(const Branch& b, const Real& x);

// The extended inverse of an exact affine branch as a piecewise-linear graph
// over [0,1], clamped stretches included.
PLFunction extended_inverse_pl(const Branch& b);

// Piecewise strictly monotone map of [0,1]: branches on closed intervals that
// tile [0,1], each with image inside [0,1]. Continuity is not required.
class PiecewiseMonotoneMap {
public:
    explicit PiecewiseMonotoneMap(std::vector<Branch> branches);

    const std::vector<Branch>& branches() const { return branches_; }
    size_t branch_count() const { return branches_.size(); }
    const std::vector<Real>& breakpoints() const { return breakpoints_; }

    // Evaluation at an interior breakpoint uses the branch to its left.
    size_t branch_index(const Real& x) const;
    Real operator()(const Real& x) const;
    double eval(double x) const;

    bool all_affine() const;
    bool exact() const;  // all forms and breakpoints exact

    // The graph as a single continuous piecewise-linear function, when the map
    // is continuous with exact affine branches.
    std::optional<PLFunction> as_pl() const;

    static PiecewiseMonotoneMap from_pl_graph(const PLFunction& f);

private:
    std::vector<Branch> branches_;
    std::vector<Real> breakpoints_;
};

std::pair<PiecewiseMonotoneMap, PiecewiseMonotoneMap> common_refinement(
    const PiecewiseMonotoneMap& m1, const PiecewiseMonotoneMap& m2);

// Strictly increasing homeomorphism of [0,1]. When the function is piecewise
// linear with rational knots, `exact_pl` carries it and enables exact paths.
struct Homeomorphism {
    std::function<double(double)> forward;
    std::function<double(double)> inverse;
    double tolerance = 1e-12;
    std::optional<PLFunction> exact_pl;

    static Homeomorphism identity();
    static Homeomorphism from_pl(const PLFunction& f);
};

// Pair of maps bounding a region: lower <= upper, matching monotonicity
// patterns, shared breakpoints.
struct Envelope {
    PiecewiseMonotoneMap lower, upper;
};

// Checks ordering on breakpoints exactly and on a dense grid numerically.
Envelope validate_envelope(const PiecewiseMonotoneMap& tau1, const PiecewiseMonotoneMap& tau2,
                           size_t grid = 16385, double tolerance = 1e-12);

// g^{-1} o map o g. Produces exact affine/quadratic branches when map and g
// allow it, composite closures otherwise.
PiecewiseMonotoneMap conjugate(const PiecewiseMonotoneMap& map, const Homeomorphism& g);

}  // namespace acim
