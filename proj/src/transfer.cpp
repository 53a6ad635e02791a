#include "acim/transfer.hpp"

#include <algorithm>
#include <cmath>

#include "acim/errors.hpp"

namespace acim {

namespace {

Rational exact_of(const Real& r) { return r.exact() ? r.rational() : Rational(r.value()); }

struct AffineBranchData {
    Rational slope, intercept;
    Rational lo, hi;    // domain
    Rational v0, v1;    // image, ordered
};

std::vector<AffineBranchData> affine_data(const PiecewiseMonotoneMap& map) {
    std::vector<AffineBranchData> out;
    out.reserve(map.branch_count());
    for (const auto& b : map.branches()) {
        const AffineForm* af = b.form.as_affine();
        if (!af)
            throw ValidationError(
                "transfer operator in density form needs affine branches; "
                "use the binned approximation for general maps");
        AffineBranchData d;
        d.slope = exact_of(af->slope);
        d.intercept = exact_of(af->intercept);
        d.lo = exact_of(b.domain.lo);
        d.hi = exact_of(b.domain.hi);
        d.v0 = d.slope * d.lo + d.intercept;
        d.v1 = d.slope * d.hi + d.intercept;
        if (d.v0 > d.v1) std::swap(d.v0, d.v1);
        if (sgn(d.slope) == 0) throw ValidationError("branch slope vanishes");
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace

PiecewiseConstantDensity fp_apply(const PiecewiseMonotoneMap& map,
                                  const PiecewiseConstantDensity& f) {
    auto branches = affine_data(map);
    const StepFunction& s = f.step();

    std::vector<Rational> knots = {0, 1};
    for (const auto& d : branches) {
        knots.push_back(d.v0);
        knots.push_back(d.v1);
        for (const auto& k : s.knots)
            if (d.lo < k && k < d.hi) knots.push_back(d.slope * k + d.intercept);
    }
    knots = sorted_unique(std::move(knots));

    std::vector<Rational> values;
    values.reserve(knots.size() - 1);
    for (size_t i = 0; i + 1 < knots.size(); ++i) {
        Rational mid = (knots[i] + knots[i + 1]) / 2;
        Rational acc = 0;
        for (const auto& d : branches) {
            if (d.v0 < mid && mid < d.v1)
                acc += s((mid - d.intercept) / d.slope) / ::abs(d.slope);
        }
        values.push_back(std::move(acc));
    }
    StepFunction out(std::move(knots), std::move(values));
    if (out.integral() != s.integral())
        throw InternalCheckError("transfer operator failed to conserve mass");
    return PiecewiseConstantDensity(std::move(out));
}

namespace {

// One branch's share of the preimage mass of [0,x]: for an increasing branch
// the preimage is [lo, ext_inv(x)], for a decreasing one [ext_inv(x), hi].
double cdf_contribution(const Branch& b, const DistributionFunction& F, double x, double F_lo,
                        double F_hi) {
    double e = extended_inverse(b, Real::approx(x)).value();
    if (b.monotonicity == Monotonicity::Increasing) return F.eval(e) - F_lo;
    return F_hi - F.eval(e);
}

std::vector<double> pushforward_grid(const PiecewiseMonotoneMap& map,
                                     const DistributionFunction& F, size_t grid) {
    if (grid < 2) throw ValidationError("cdf_pushforward grid must have at least 2 points");
    std::vector<double> xs;
    xs.reserve(grid + 4 * map.branch_count() + 8);
    for (size_t k = 0; k < grid; ++k)
        xs.push_back(static_cast<double>(k) / static_cast<double>(grid - 1));
    for (const auto& bp : map.breakpoints()) xs.push_back(bp.value());
    for (const auto& b : map.branches()) {
        Interval img = b.image();
        xs.push_back(img.lo.value());
        xs.push_back(img.hi.value());
    }
    if (auto fpl = F.as_pl()) {
        for (const auto& k : fpl->xs) xs.push_back(k.get_d());
    } else if (const auto* segs = F.segments()) {
        for (const auto& s : *segs) xs.push_back(s.domain.hi.value());
    }
    std::sort(xs.begin(), xs.end());
    std::vector<double> dedup;
    dedup.reserve(xs.size());
    for (double x : xs) {
        if (x < 0 || x > 1) continue;
        if (dedup.empty() || x - dedup.back() > 1e-15) dedup.push_back(x);
    }
    if (dedup.front() != 0) dedup.insert(dedup.begin(), 0.0);
    if (dedup.back() != 1) dedup.push_back(1.0);
    return dedup;
}

}  // namespace

DistributionFunction cdf_pushforward(const PiecewiseMonotoneMap& map,
                                     const DistributionFunction& F, size_t grid) {
    std::vector<double> xs = pushforward_grid(map, F, grid);

    std::vector<double> F_lo, F_hi;
    for (const auto& b : map.branches()) {
        F_lo.push_back(F.eval(b.domain.lo.value()));
        F_hi.push_back(F.eval(b.domain.hi.value()));
    }

    std::vector<double> Gs;
    Gs.reserve(xs.size());
    for (double x : xs) {
        double g = 0;
        for (size_t j = 0; j < map.branch_count(); ++j)
            g += cdf_contribution(map.branches()[j], F, x, F_lo[j], F_hi[j]);
        Gs.push_back(g);
    }
    // The sum is nondecreasing up to rounding in the per-branch terms.
    for (size_t i = 1; i < Gs.size(); ++i) {
        if (Gs[i] < Gs[i - 1]) {
            if (Gs[i - 1] - Gs[i] > 1e-12)
                throw InternalCheckError("pushforward cdf decreased by more than 1e-12");
            Gs[i] = Gs[i - 1];
        }
    }
    return DistributionFunction::tabulated(std::move(xs), std::move(Gs));
}

namespace {

// Exact piecewise-linear pushforward for exact affine maps and PL cdfs.
PLFunction exact_pl_pushforward(const PiecewiseMonotoneMap& map, const PLFunction& F) {
    PLFunction acc = PLFunction::constant(0, 1, 0);
    Rational shift = 0;
    for (const auto& b : map.branches()) {
        bool inc = b.monotonicity == Monotonicity::Increasing;
        PLFunction Fe = PLFunction::compose(F, extended_inverse_pl(b));
        acc = PLFunction::combine(1, acc, inc ? 1 : -1, Fe);
        shift += inc ? -F(b.domain.lo.rational()) : F(b.domain.hi.rational());
    }
    return PLFunction::combine(1, acc, 1, PLFunction::constant(0, 1, shift));
}

}  // namespace

InvarianceReport check_invariance(const PiecewiseMonotoneMap& map, const DistributionFunction& F,
                                  size_t grid) {
    if (map.all_affine() && map.exact()) {
        if (auto fpl = F.as_pl()) {
            StepFunction dens = fpl->derivative();
            PiecewiseConstantDensity in(dens);
            PiecewiseConstantDensity out = fp_apply(map, in);
            bool fixed = l1_distance(out.step(), in.step()) == 0;

            PLFunction G = exact_pl_pushforward(map, *fpl);
            PLFunction diff = PLFunction::combine(1, G, -1, *fpl);
            Rational sup = 0;
            Rational worst = 0;
            for (size_t i = 0; i < diff.xs.size(); ++i) {
                Rational m = ::abs(diff.ys[i]);
                if (m > sup) {
                    sup = m;
                    worst = diff.xs[i];
                }
            }
            if (fixed && sgn(sup) != 0)
                throw InternalCheckError("density fixed but cdf pushforward moved");
            InvarianceReport r;
            r.sup_error = sup.get_d();
            r.worst_point = worst.get_d();
            r.grid_size = diff.xs.size();
            r.exact = fixed;
            return r;
        }
    }
    DistributionFunction G = cdf_pushforward(map, F, grid);
    const auto* t = G.tab();
    InvarianceReport r;
    r.grid_size = t->xs.size();
    for (size_t i = 0; i < t->xs.size(); ++i) {
        double err = std::abs(t->Fs[i] - F.eval(t->xs[i]));
        if (err > r.sup_error) {
            r.sup_error = err;
            r.worst_point = t->xs[i];
        }
    }
    return r;
}

}  // namespace acim
