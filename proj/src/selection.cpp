#include "acim/selection.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "acim/errors.hpp"

namespace acim {

namespace {

void require_unit_interval_weight(const Real& w) {
    if (compare(w, Real(0)) <= 0 || compare(w, Real(1)) >= 0)
        throw ValidationError("weight must lie strictly between 0 and 1");
}

// Largest u in [0,1] with pred(u) true, assuming pred holds on a prefix.
double prefix_end(const std::function<bool(double)>& pred) {
    if (!pred(0.0)) return 0.0;
    if (pred(1.0)) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 64; ++i) {
        double mid = 0.5 * (lo + hi);
        (pred(mid) ? lo : hi) = mid;
    }
    return lo;
}

// Smallest u in [0,1] with pred(u) true, assuming pred holds on a suffix.
double suffix_start(const std::function<bool(double)>& pred) {
    if (!pred(1.0)) return 1.0;
    if (pred(0.0)) return 0.0;
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 64; ++i) {
        double mid = 0.5 * (lo + hi);
        (pred(mid) ? hi : lo) = mid;
    }
    return hi;
}

// Bisection solve of m(u) = target on [lo, hi] for continuous monotone m of
// either orientation.
double solve_monotone(const std::function<double(double)>& m, double lo, double hi,
                      double target) {
    bool rising = m(lo) <= m(hi);
    for (int i = 0; i < 64 && hi - lo > 1e-16; ++i) {
        double mid = 0.5 * (lo + hi);
        if ((m(mid) < target) == rising)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

void append_affine_pieces(const PLFunction& graph, std::vector<Branch>& out) {
    PLFunction g = graph.simplified();
    for (size_t i = 0; i + 1 < g.xs.size(); ++i) {
        Rational slope = (g.ys[i + 1] - g.ys[i]) / (g.xs[i + 1] - g.xs[i]);
        Rational intercept = g.ys[i] - slope * g.xs[i];
        out.push_back(make_branch(Interval(Real(g.xs[i]), Real(g.xs[i + 1])),
                                  BranchForm::affine(Real(slope), Real(intercept))));
    }
}

// One cell of the exact path. The branch inverse of eta over this cell is
// F^-1(lam*F1(t1inv) + (1-lam)*F2(t2inv)), a piecewise-linear function of the
// image variable; stripping its clamped end plateaus and swapping coordinates
// yields the branch graph.
void exact_selection_branches(const Branch& b1, const Branch& b2, const PLFunction& F1,
                              const PLFunction& F2, const PLFunction& Finv, const Rational& lam,
                              std::vector<Branch>& out) {
    Rational a = b1.domain.lo.rational();
    Rational b = b1.domain.hi.rational();
    PLFunction phi =
        PLFunction::combine(lam, PLFunction::compose(F1, extended_inverse_pl(b1)),
                            Rational(1) - lam, PLFunction::compose(F2, extended_inverse_pl(b2)));
    PLFunction einv = PLFunction::compose(Finv, phi);
    bool inc = b1.monotonicity == Monotonicity::Increasing;
    const Rational& va = inc ? a : b;  // einv(0)
    const Rational& vb = inc ? b : a;  // einv(1)
    if (einv.ys.front() != va || einv.ys.back() != vb)
        throw InternalCheckError("selection branch inverse misses its cell endpoints");
    size_t i0 = 0;
    while (i0 + 1 < einv.ys.size() && einv.ys[i0 + 1] == va) ++i0;
    size_t i1 = einv.ys.size() - 1;
    while (i1 > 0 && einv.ys[i1 - 1] == vb) --i1;
    if (i0 >= i1) throw InternalCheckError("selection branch collapsed to a point");
    // Interior flats of einv would be jumps of the branch; keep their first
    // point so the graph stays a function.
    std::vector<Rational> gx, gy;
    auto take = [&](size_t k) {
        if (gx.empty() || einv.ys[k] > gx.back()) {
            gx.push_back(einv.ys[k]);
            gy.push_back(einv.xs[k]);
        }
    };
    if (inc)
        for (size_t k = i0; k <= i1; ++k) take(k);
    else
        for (size_t k = i1 + 1; k-- > i0;) take(k);
    if (gx.front() != a || gx.back() != b)
        throw InternalCheckError("selection branch does not span its cell");
    append_affine_pieces(PLFunction(std::move(gx), std::move(gy)), out);
}

// One cell of the general path: the same construction with the branch held as
// a monotone closure. The inverse callable is the composed formula itself; the
// forward callable solves phi(u) = F(t) inside the plateau-free core, located
// first by bisecting on the plateau predicates.
void closure_selection_branches(const Branch& b1, const Branch& b2, const DistributionFunction& F1,
                                const DistributionFunction& F2, const DistributionFunction& F,
                                double lam, std::vector<Branch>& out) {
    double a = b1.domain.lo.value();
    double b = b1.domain.hi.value();
    bool inc = b1.monotonicity == Monotonicity::Increasing;
    auto phi = [b1, b2, F1, F2, lam](double u) {
        Real x = Real::approx(std::clamp(u, 0.0, 1.0));
        double t1 = extended_inverse(b1, x).value();
        double t2 = extended_inverse(b2, x).value();
        return lam * F1.eval(t1) + (1.0 - lam) * F2.eval(t2);
    };
    double Fa = F.eval(a);
    double Fb = F.eval(b);
    const double eps = 1e-14;
    double xlo, xhi;
    if (inc) {
        xlo = prefix_end([&](double u) { return phi(u) <= Fa + eps; });
        xhi = suffix_start([&](double u) { return phi(u) >= Fb - eps; });
    } else {
        xlo = prefix_end([&](double u) { return phi(u) >= Fb - eps; });
        xhi = suffix_start([&](double u) { return phi(u) <= Fa + eps; });
    }
    if (!(xhi - xlo > 1e-12)) throw InternalCheckError("selection branch collapsed to a point");
    auto forward = [phi, F, xlo, xhi](double t) { return solve_monotone(phi, xlo, xhi, F.eval(t)); };
    auto inverse = [phi, F](double u) { return F.invert(std::clamp(phi(u), 0.0, 1.0)); };
    out.push_back(make_branch(Interval(b1.domain.lo, b1.domain.hi),
                              BranchForm::closure(forward, inverse, 1e-10)));
}

// Aligns the two edges on their common breakpoint refinement and checks that
// facing branches run the same direction. Ordering of the edges is not
// required: the construction formulas stay well defined when the edges cross,
// and assert_in_hull measures the output against both of them.
Envelope align_edges(const PiecewiseMonotoneMap& lower, const PiecewiseMonotoneMap& upper) {
    auto [lo, hi] = common_refinement(lower, upper);
    for (size_t i = 0; i < lo.branch_count(); ++i)
        if (lo.branches()[i].monotonicity != hi.branches()[i].monotonicity)
            throw ValidationError("envelope monotonicity mismatch on piece " + std::to_string(i) +
                                  " [" + to_string(lo.branches()[i].domain.lo) + ", " +
                                  to_string(lo.branches()[i].domain.hi) + "]");
    return Envelope{std::move(lo), std::move(hi)};
}

// The construction guarantees that every value lies between the pointwise
// smaller and larger of the two edge values; for an ordered envelope this is
// exactly lower <= eta <= upper. A violation means the assembly is broken.
void assert_in_hull(const PiecewiseMonotoneMap& eta, const Envelope& e, size_t grid) {
    std::vector<double> pts;
    pts.reserve(grid + 3 * eta.breakpoints().size());
    for (size_t k = 0; k < grid; ++k)
        pts.push_back(static_cast<double>(k) / static_cast<double>(grid - 1));
    for (const PiecewiseMonotoneMap* m : {&eta, &e.lower, &e.upper})
        for (const Real& b : m->breakpoints()) pts.push_back(b.value());
    double worst = 0.0, at = 0.0;
    for (double x : pts) {
        double a = e.lower.eval(x);
        double b = e.upper.eval(x);
        double v = eta.eval(x);
        double d = std::max(std::min(a, b) - v, v - std::max(a, b));
        if (d > worst) {
            worst = d;
            at = x;
        }
    }
    if (worst > 1e-9)
        throw InternalCheckError("selection escapes its envelope by " + std::to_string(worst) +
                                 " at x=" + std::to_string(at));
}

bool near_point(const Real& v, const Rational& w) {
    return v.exact() ? v.rational() == w : std::abs(v.value() - w.get_d()) <= 1e-12;
}

}  // namespace

SelectionResult construct_selection(const Envelope& env, const DistributionFunction& F1,
                                    const DistributionFunction& F2, const Real& lambda,
                                    size_t resolution) {
    require_unit_interval_weight(lambda);
    if (resolution < 3) throw ValidationError("resolution needs at least three points");
    Envelope e = align_edges(env.lower, env.upper);
    DistributionFunction F = DistributionFunction::mix(F1, F2, lambda);
    if (!F.strictly_increasing())
        throw NonInvertibleCdf("combined distribution function is not strictly increasing");

    bool exact = e.lower.all_affine() && e.upper.all_affine() && e.lower.exact() &&
                 e.upper.exact() && lambda.exact();
    std::optional<PLFunction> F1p, F2p, Fp;
    if (exact) {
        F1p = F1.as_pl();
        F2p = F2.as_pl();
        Fp = F.as_pl();
        exact = F1p.has_value() && F2p.has_value() && Fp.has_value();
    }

    std::vector<Branch> parts;
    if (exact) {
        PLFunction Finv = Fp->inverse();
        for (size_t j = 0; j < e.lower.branch_count(); ++j)
            exact_selection_branches(e.lower.branches()[j], e.upper.branches()[j], *F1p, *F2p,
                                     Finv, lambda.rational(), parts);
    } else {
        for (size_t j = 0; j < e.lower.branch_count(); ++j)
            closure_selection_branches(e.lower.branches()[j], e.upper.branches()[j], F1, F2, F,
                                       lambda.value(), parts);
    }
    SelectionResult result{PiecewiseMonotoneMap(std::move(parts)), std::move(F),
                           SelectionConstruction::MainTheorem, lambda};
    assert_in_hull(result.eta, e, std::min<size_t>(resolution, 2049));
    return result;
}

std::pair<SelectionResult, TentLikeAuxiliary> construct_tentlike(const Envelope& env,
                                                                 const DistributionFunction& F1,
                                                                 const DistributionFunction& F2,
                                                                 const Real& lambda) {
    require_unit_interval_weight(lambda);
    Envelope e = align_edges(env.lower, env.upper);
    if (e.lower.branch_count() != 2)
        throw ValidationError("tent-like construction needs two-branch maps over a common peak");
    const Branch& t11 = e.lower.branches()[0];
    const Branch& t21 = e.upper.branches()[0];
    const Branch& t12 = e.lower.branches()[1];
    const Branch& t22 = e.upper.branches()[1];
    if (t11.monotonicity != Monotonicity::Increasing ||
        t12.monotonicity != Monotonicity::Decreasing)
        throw ValidationError("tent-like construction needs a rising branch then a falling one");
    auto near = [](const Real& v, double w) { return std::abs(v.value() - w) <= 1e-9; };
    for (const Branch* rise : {&t11, &t21})
        if (!near(rise->value_at_lo, 0.0) || !near(rise->value_at_hi, 1.0))
            throw ValidationError("rising branches must go from 0 to 1");
    for (const Branch* fall : {&t12, &t22})
        if (!near(fall->value_at_lo, 1.0) || !near(fall->value_at_hi, 0.0))
            throw ValidationError("falling branches must go from 1 to 0");
    Real peak = t11.domain.hi;
    DistributionFunction F = DistributionFunction::mix(F1, F2, lambda);
    if (!F.strictly_increasing())
        throw NonInvertibleCdf("combined distribution function is not strictly increasing");

    // Both rising branches are onto [0,1], so their plain inverses appear in
    // the rising-branch formula and no plateau stripping is needed.
    double l = lambda.value();
    auto phi1 = [t11, t21, F1, F2, l](double u) {
        Real x = Real::approx(std::clamp(u, 0.0, 1.0));
        double a1 = branch_inverse(t11, x).value();
        double a2 = branch_inverse(t21, x).value();
        return (1.0 - l) * F2.eval(a2) + l * F1.eval(a1);
    };
    auto eta1_inverse = [phi1, F](double u) { return F.invert(std::clamp(phi1(u), 0.0, 1.0)); };
    auto eta1 = [phi1, F](double z) { return solve_monotone(phi1, 0.0, 1.0, F.eval(z)); };
    auto s = [eta1, F](double z) {
        double w = 1.0 + F.eval(z) - F.eval(eta1(z));
        return F.invert(std::clamp(w, 0.0, 1.0));
    };
    double pk = peak.value();
    // s(eta1_inverse(u)) with eta1(eta1_inverse(u)) = u collapses to a single
    // inversion, so the falling branch never nests bisections.
    auto eta2_inverse = [eta1_inverse, F](double u) {
        double w = 1.0 + F.eval(eta1_inverse(u)) - F.eval(u);
        return F.invert(std::clamp(w, 0.0, 1.0));
    };
    auto eta2 = [eta2_inverse](double x) { return solve_monotone(eta2_inverse, 0.0, 1.0, x); };

    std::vector<Branch> parts;
    parts.push_back(
        make_branch(Interval(Real(0), peak), BranchForm::closure(eta1, eta1_inverse, 1e-10)));
    parts.push_back(
        make_branch(Interval(peak, Real(1)), BranchForm::closure(eta2, eta2_inverse, 1e-10)));
    SelectionResult result{PiecewiseMonotoneMap(std::move(parts)), std::move(F),
                           SelectionConstruction::TentLike, lambda};
    assert_in_hull(result.eta, e, 1025);
    return {std::move(result), TentLikeAuxiliary{s, eta1_inverse, pk}};
}

DistributionFunction conjugating_homeomorphism(const DistributionFunction& F2,
                                               const std::vector<Rational>& plateau_values,
                                               const std::vector<Rational>& partition) {
    if (partition.size() < 2 || partition.front() != 0 || partition.back() != 1)
        throw ValidationError("partition must run from 0 to 1");
    for (size_t i = 0; i + 1 < partition.size(); ++i)
        if (partition[i] >= partition[i + 1])
            throw ValidationError("partition points must strictly increase");
    if (plateau_values.size() + 1 != partition.size())
        throw ValidationError("need one plateau value per partition cell");
    for (const Rational& c : plateau_values) {
        if (sgn(c) == 0) throw ValidationError("plateau value zero would divide by zero");
        if (sgn(c) < 0) throw ValidationError("plateau values must be positive");
    }

    if (auto p = F2.as_pl()) {
        std::vector<Rational> xs = {0}, ys = {0};
        for (size_t i = 0; i + 1 < partition.size(); ++i) {
            PLFunction piece = p->restrict(partition[i], partition[i + 1]);
            Rational base = ys.back() - piece.ys.front() / plateau_values[i];
            for (size_t k = 1; k < piece.xs.size(); ++k) {
                xs.push_back(piece.xs[k]);
                ys.push_back(base + piece.ys[k] / plateau_values[i]);
            }
        }
        PLFunction h(std::move(xs), std::move(ys));
        if (h.ys.back() != 1)
            throw ValidationError("inconsistent inputs: reweighted mass reaches " +
                                  to_string(h.ys.back()) + " at 1, not 1");
        for (const Rational& a : partition)
            if (h(a) != a)
                throw ValidationError("inconsistent inputs: partition point " + to_string(a) +
                                      " is not fixed");
        return DistributionFunction::from_pl(std::move(h));
    }
    if (auto segs = F2.segments()) {
        std::vector<CdfSegment> out;
        std::vector<Real> boundary = {Real(0)};
        Real acc(0);
        for (size_t i = 0; i + 1 < partition.size(); ++i) {
            Real a(partition[i]), b(partition[i + 1]);
            Real ci(plateau_values[i]);
            Real base = acc - F2.eval(a) / ci;
            for (const CdfSegment& seg : *segs) {
                Real lo = max(seg.domain.lo, a);
                Real hi = min(seg.domain.hi, b);
                if (!(lo < hi)) continue;
                out.push_back({Interval(lo, hi),
                               BranchForm::composite(BranchForm::affine(Real(1) / ci, base),
                                                     seg.form)});
            }
            acc = base + F2.eval(b) / ci;
            boundary.push_back(acc);
        }
        if (!near_point(acc, 1))
            throw ValidationError("inconsistent inputs: reweighted mass reaches " +
                                  to_string(acc) + " at 1, not 1");
        for (size_t i = 0; i < partition.size(); ++i)
            if (!near_point(boundary[i], partition[i]))
                throw ValidationError("inconsistent inputs: partition point " +
                                      to_string(partition[i]) + " is not fixed");
        return DistributionFunction::piecewise(std::move(out));
    }
    throw ValidationError(
        "conjugating homeomorphism needs a piecewise linear or closed-form distribution function");
}

DistributionFunction conjugating_homeomorphism(const PiecewiseConstantDensity& f2,
                                               const std::vector<Rational>& plateau_values,
                                               const std::vector<Rational>& partition) {
    return conjugating_homeomorphism(cdf_from_density(f2), plateau_values, partition);
}

SelectionResult construct_conjugacy_selection(const PiecewiseMonotoneMap& tau1,
                                              const DistributionFunction& h, const Real& alpha) {
    require_unit_interval_weight(alpha);
    MarkovStructure ms = markov_structure(tau1);
    PiecewiseConstantDensity f1 = markov_invariant_density(tau1, ms);
    if (!h.strictly_increasing())
        throw NonInvertibleCdf("conjugating homeomorphism must be strictly increasing");
    for (const Rational& p : ms.partition)
        if (!near_point(h.eval(Real(p)), p))
            throw ValidationError("homeomorphism must fix the partition point " + to_string(p));

    DistributionFunction g =
        DistributionFunction::mix(DistributionFunction::identity(), h, alpha);
    PiecewiseMonotoneMap tau = conjugate(tau1, g.as_homeomorphism());

    DistributionFunction F1 = cdf_from_density(f1);
    PLFunction F1pl = *F1.as_pl();
    std::optional<DistributionFunction> F2;
    if (auto hp = h.as_pl()) {
        F2 = DistributionFunction::from_pl(PLFunction::compose(F1pl, *hp));
    } else if (auto segs = h.segments()) {
        // F1 is affine with slope c_i on each partition cell and h fixes the
        // cell endpoints, so F1(h(x)) is c_i*h(x) + d_i there.
        std::vector<CdfSegment> out;
        for (size_t i = 0; i + 1 < ms.partition.size(); ++i) {
            Real a(ms.partition[i]), b(ms.partition[i + 1]);
            Rational c = f1.step().values[i];
            Rational d = F1pl(ms.partition[i]) - c * ms.partition[i];
            for (const CdfSegment& seg : *segs) {
                Real lo = max(seg.domain.lo, a);
                Real hi = min(seg.domain.hi, b);
                if (!(lo < hi)) continue;
                out.push_back({Interval(lo, hi),
                               BranchForm::composite(BranchForm::affine(Real(c), Real(d)),
                                                     seg.form)});
            }
        }
        F2 = DistributionFunction::piecewise(std::move(out));
    } else {
        throw ValidationError(
            "conjugacy needs a piecewise linear or closed-form homeomorphism");
    }
    DistributionFunction target = DistributionFunction::mix(F1, *F2, alpha);
    return {std::move(tau), std::move(target), SelectionConstruction::Conjugacy, alpha};
}

SymmetricSlopeResult symmetric_slope_solver(const Real& lambda) {
    require_unit_interval_weight(lambda);
    Real one(1), two(2);
    Real s2 = two * (one - lambda) / (one + lambda);
    Real s4 = two * (one + lambda) / (one - lambda);
    Real x1 = Real(rat(1, 8));
    Real q1 = Real(rat(1, 4));
    Real half = Real(rat(1, 2));
    Real v2 = q1 + s2 / Real(8);   // value at 1/4
    Real x2 = half - s2 / Real(16);  // preimage of 3/4
    Real top = Real(rat(3, 4)) + s4 * (half - x2);
    if (!near_point(top, 1))
        throw InternalCheckError("slope cases do not close at the peak; value there is " +
                                 to_string(top));

    std::vector<Rational> xs = {0,   rat(1, 8), rat(1, 4),        x2.rational(),
                                rat(1, 2),      1 - x2.rational(), rat(3, 4),
                                rat(7, 8),      1};
    std::vector<Rational> vs = {0, rat(1, 4), v2.rational(), rat(3, 4), 1,
                                rat(3, 4),    v2.rational(), rat(1, 4), 0};
    PiecewiseMonotoneMap tau = PiecewiseMonotoneMap::from_pl_graph(PLFunction(xs, vs));

    Rational lam = lambda.rational();
    PiecewiseConstantDensity target = PiecewiseConstantDensity::from_values(
        {0, rat(1, 4), rat(3, 4), 1},
        {Rational(1) - lam, Rational(1) + lam, Rational(1) - lam});

    std::vector<std::pair<Interval, Real>> profile = {{Interval(Real(0), x1), two},
                                                      {Interval(x1, q1), s2},
                                                      {Interval(q1, x2), two},
                                                      {Interval(x2, half), s4}};
    SelectionResult sel{std::move(tau), cdf_from_density(target),
                        SelectionConstruction::SymmetricSlopes, lambda};
    return {std::move(profile), std::move(sel), std::move(target)};
}

BetweennessReport betweenness_check(const PiecewiseMonotoneMap& eta, const Envelope& env,
                                    size_t grid) {
    if (grid < 2) throw ValidationError("grid needs at least two points");
    std::vector<double> pts;
    pts.reserve(grid + 3 * eta.breakpoints().size());
    for (size_t k = 0; k < grid; ++k)
        pts.push_back(static_cast<double>(k) / static_cast<double>(grid - 1));
    for (const PiecewiseMonotoneMap* m : {&eta, &env.lower, &env.upper})
        for (const Real& b : m->breakpoints()) pts.push_back(b.value());
    BetweennessReport r;
    for (double x : pts) {
        double lo = env.lower.eval(x);
        double hi = env.upper.eval(x);
        double e = eta.eval(x);
        if (lo - e > r.lower_violation) {
            r.lower_violation = lo - e;
            r.lower_point = x;
        }
        if (e - hi > r.upper_violation) {
            r.upper_violation = e - hi;
            r.upper_point = x;
        }
    }
    return r;
}

}  // namespace acim
