#pragma once

#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "acim/interval_maps.hpp"
#include "acim/pl.hpp"
#include "acim/real.hpp"

namespace acim {

// Step density on [0,1] with nonnegative rational values integrating to 1.
// Inputs carrying float rounding are renormalized exactly when the mass is
// within 1e-12 of 1; anything further off is rejected.
class PiecewiseConstantDensity {
public:
    explicit PiecewiseConstantDensity(StepFunction step);

    static PiecewiseConstantDensity uniform();
    static PiecewiseConstantDensity from_values(std::vector<Rational> knots,
                                                std::vector<Rational> values);

    const StepFunction& step() const { return step_; }
    Rational operator()(const Rational& x) const { return step_(x); }
    double eval(double x) const { return step_.eval_double(x); }

private:
    StepFunction step_;
};

// Exact L1 distance between two step functions on [0,1].
Rational l1_distance(const StepFunction& a, const StepFunction& b);

// One strictly increasing piece of a distribution function. The form's values
// at the domain endpoints are the CDF values there.
struct CdfSegment {
    Interval domain;
    BranchForm form;
};

class NonInvertibleCdf : public StructureError {
public:
    explicit NonInvertibleCdf(const std::string& msg) : StructureError(msg) {}
};

// Distribution function on [0,1]: F(0)=0, F(1)=1, nondecreasing, continuous.
// One of: piecewise linear (flat parts allowed), piecewise polynomial with
// strictly increasing closed-form segments, a tabulated grid with linear
// interpolation, or a convex mix  lambda*F1 + (1-lambda)*F2.
class DistributionFunction {
public:
    static DistributionFunction identity();
    static DistributionFunction from_pl(PLFunction f);
    static DistributionFunction piecewise(std::vector<CdfSegment> segments);
    static DistributionFunction tabulated(std::vector<double> xs, std::vector<double> Fs);
    static DistributionFunction mix(DistributionFunction F1, DistributionFunction F2,
                                    const Real& lambda);

    double eval(double x) const;
    Real eval(const Real& x) const;

    // Solves F(x) = u. Exact closed forms for linear/polynomial segments,
    // interpolation inversion for tabulated grids, bisection for mixes.
    double invert(double u) const;
    Real invert(const Real& u) const;

    bool strictly_increasing() const;
    std::optional<PLFunction> as_pl() const;
    Homeomorphism as_homeomorphism() const;

    bool is_mix() const { return std::holds_alternative<Mix>(v_); }
    const Real& mix_lambda() const;
    const DistributionFunction& mix_first() const;
    const DistributionFunction& mix_second() const;
    const std::vector<CdfSegment>* segments() const;
    const PLFunction* pl() const;
    struct Tab {
        std::vector<double> xs, Fs;
    };
    const Tab* tab() const;

private:
    struct Mix {
        std::shared_ptr<DistributionFunction> first, second;
        Real lambda;
    };
    std::variant<PLFunction, std::vector<CdfSegment>, Tab, Mix> v_;
    DistributionFunction() = default;
};

DistributionFunction cdf_from_density(const PiecewiseConstantDensity& f);

Real invert_cdf(const DistributionFunction& F, const Real& u);

DistributionFunction convex_combination(const DistributionFunction& F1,
                                        const DistributionFunction& F2, const Real& lambda);

// Partition closed under branch images: every cell maps onto a run of
// consecutive cells. `incidence[i]` is that run for the branch piece over
// cell i, as a [first, last] cell index pair.
struct MarkovStructure {
    std::vector<Rational> partition;
    std::vector<std::pair<size_t, size_t>> incidence;
    size_t cells() const { return partition.size() - 1; }
};

// Derives the coarsest Markov partition refining the map's breakpoints, by
// closing the breakpoint set under branch-endpoint images.
MarkovStructure markov_structure(const PiecewiseMonotoneMap& map, size_t max_cells = 8192);

// Carries every stationary density when the eigenspace at 1 has dimension
// greater than one.
class AmbiguousInvariantDensity : public StructureError {
public:
    AmbiguousInvariantDensity(std::string msg, std::vector<StepFunction> basis)
        : StructureError(std::move(msg)), basis_(std::move(basis)) {}
    const std::vector<StepFunction>& basis() const { return basis_; }

private:
    std::vector<StepFunction> basis_;
};

PiecewiseConstantDensity markov_invariant_density(const PiecewiseMonotoneMap& map,
                                                  const MarkovStructure& structure);
PiecewiseConstantDensity markov_invariant_density(const PiecewiseMonotoneMap& map);

PiecewiseConstantDensity ulam_approximation(const PiecewiseMonotoneMap& map, size_t n_bins,
                                            double residual = 1e-12, size_t max_iter = 100000);

double ks_distance(const DistributionFunction& F, std::vector<double> samples);

}  // namespace acim
