#pragma once

#include <cstddef>

#include "acim/interval_maps.hpp"
#include "acim/measures.hpp"

namespace acim {

// Result of testing whether a map leaves a distribution function fixed.
// `exact` means the fixity was established in rational arithmetic, in which
// case sup_error is exactly zero.
struct InvarianceReport {
    double sup_error = 0;
    double worst_point = 0;
    size_t grid_size = 0;
    bool exact = false;
};

// Transfer operator on step densities: (Pf)(x) sums f at the inverse branch
// points weighted by the reciprocal slope magnitudes. Affine branches only;
// computed in exact rational arithmetic.
PiecewiseConstantDensity fp_apply(const PiecewiseMonotoneMap& map,
                                  const PiecewiseConstantDensity& f);

// Same operator acting on distribution functions: G(x) is the F-mass of the
// preimage of [0,x], accumulated branch by branch via extended inverses.
// Works for any branch form; samples onto a tabulated cdf over `grid`
// equispaced points plus every breakpoint and knot.
DistributionFunction cdf_pushforward(const PiecewiseMonotoneMap& map,
                                     const DistributionFunction& F, size_t grid = 16385);

InvarianceReport check_invariance(const PiecewiseMonotoneMap& map, const DistributionFunction& F,
                                  size_t grid = 16385);

}  // namespace acim
