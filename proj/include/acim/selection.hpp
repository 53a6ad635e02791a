#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "acim/interval_maps.hpp"
#include "acim/measures.hpp"

namespace acim {

enum class SelectionConstruction { MainTheorem, TentLike, Conjugacy, SymmetricSlopes };

// A single-valued map eta with tau1 <= eta <= tau2 preserving target_cdf.
struct SelectionResult {
    PiecewiseMonotoneMap eta;
    DistributionFunction target_cdf;
    SelectionConstruction construction;
    Real lambda;
};

// Byproducts of the two-branch unimodal construction. `s` maps [0, peak]
// onto [peak, 1] and relates the rising branch to the falling one;
// `eta1_inverse` is the inverse of the rising branch over [0,1].
struct TentLikeAuxiliary {
    std::function<double(double)> s;
    std::function<double(double)> eta1_inverse;
    double peak = 0.5;
};

struct BetweennessReport {
    double lower_violation = 0.0;  // max over the grid of (tau1 - eta)+
    double upper_violation = 0.0;  // max over the grid of (eta - tau2)+
    double lower_point = 0.0;
    double upper_point = 0.0;
};

// The assembled symmetric map together with the per-interval slope
// magnitudes on the left half; the right half mirrors them.
struct SymmetricSlopeResult {
    std::vector<std::pair<Interval, Real>> slope_profile;
    SelectionResult selection;
    PiecewiseConstantDensity target_density;
};

// Builds eta piece by piece from the extended inverses of the envelope
// branches: each branch inverse is F^-1(lambda*F1(t1inv) + (1-lambda)*F2(t2inv))
// with the flat clamped stretches removed, and eta is its monotone inverse.
// F1, F2 must be invariant for the envelope members (caller-checked); the
// combined F = lambda*F1 + (1-lambda)*F2 must be strictly increasing.
// Assembles exact piecewise-linear branches when the envelope and both
// distribution functions are piecewise linear with exact data.
SelectionResult construct_selection(const Envelope& env, const DistributionFunction& F1,
                                    const DistributionFunction& F2, const Real& lambda,
                                    size_t resolution = 16385);

// Two-branch unimodal variant: solves the rising branch first, derives the
// relating map s, and folds the falling branch through it.
std::pair<SelectionResult, TentLikeAuxiliary> construct_tentlike(const Envelope& env,
                                                                 const DistributionFunction& F1,
                                                                 const DistributionFunction& F2,
                                                                 const Real& lambda);

// Integrates F2-mass reweighted by the reciprocal plateau values of a step
// density: h(x) = integral of f2 * sum(1/c_i on cell i). The result must be
// an increasing bijection of [0,1] fixing every partition point; inputs that
// break either condition are rejected as inconsistent.
DistributionFunction conjugating_homeomorphism(const DistributionFunction& F2,
                                               const std::vector<Rational>& plateau_values,
                                               const std::vector<Rational>& partition);
DistributionFunction conjugating_homeomorphism(const PiecewiseConstantDensity& f2,
                                               const std::vector<Rational>& plateau_values,
                                               const std::vector<Rational>& partition);

// Given tau2 = h^-1 o tau1 o h with h fixing tau1's Markov partition points,
// returns tau = g^-1 o tau1 o g for g = alpha*id + (1-alpha)*h, which lies
// between tau1 and tau2 and preserves alpha*f1 + (1-alpha)*f2.
SelectionResult construct_conjugacy_selection(const PiecewiseMonotoneMap& tau1,
                                              const DistributionFunction& h, const Real& alpha);

// Solves the four-case reciprocal-slope system for the fixed envelope made of
// the quadratic-edged lower map and the tent, with target density
// (1-lambda) on [0,1/4] u [3/4,1] and (1+lambda) on [1/4,3/4].
SymmetricSlopeResult symmetric_slope_solver(const Real& lambda);

// Max violations of tau1 <= eta <= tau2 over an equispaced grid joined with
// the breakpoints of all three maps.
BetweennessReport betweenness_check(const PiecewiseMonotoneMap& eta, const Envelope& env,
                                    size_t grid = 16385);

}  // namespace acim
