#include <doctest.h>

#include <cmath>
#include <random>

#include "acim/errors.hpp"
#include "acim/interval_maps.hpp"
#include "acim/measures.hpp"

using namespace acim;

namespace {

PiecewiseMonotoneMap fourbranch_a() {
    // Slopes 4/3, 4, -4, -4/3.
    return PiecewiseMonotoneMap::from_pl_graph(PLFunction(
        {0, rat(3, 8), rat(1, 2), rat(5, 8), 1}, {0, rat(1, 2), 1, rat(1, 2), 0}));
}

PiecewiseMonotoneMap fourbranch_b() {
    // Slopes 3, 3/2, -3/2, -3.
    return PiecewiseMonotoneMap::from_pl_graph(PLFunction(
        {0, rat(1, 6), rat(1, 2), rat(5, 6), 1}, {0, rat(1, 2), 1, rat(1, 2), 0}));
}

PiecewiseMonotoneMap mixed_slope_map() {
    // Slopes 3, 3/2, -3, -3/2; preserves the uniform density.
    return PiecewiseMonotoneMap::from_pl_graph(PLFunction(
        {0, rat(1, 6), rat(1, 2), rat(2, 3), 1}, {0, rat(1, 2), 1, rat(1, 2), 0}));
}

PiecewiseMonotoneMap tent() {
    return PiecewiseMonotoneMap::from_pl_graph(PLFunction({0, rat(1, 2), 1}, {0, 1, 0}));
}

PiecewiseConstantDensity density_a() {
    return PiecewiseConstantDensity::from_values({0, rat(1, 2), 1}, {rat(3, 2), rat(1, 2)});
}

PiecewiseConstantDensity density_b() {
    return PiecewiseConstantDensity::from_values({0, rat(1, 2), 1}, {rat(2, 3), rat(4, 3)});
}

}  // namespace

TEST_CASE("piecewise constant density validation") {
    CHECK_THROWS_AS(PiecewiseConstantDensity::from_values({0, rat(1, 2), 1}, {rat(3, 2), rat(-1, 2)}),
                    ValidationError);
    CHECK_THROWS_AS(PiecewiseConstantDensity::from_values({0, rat(1, 2), 1}, {1, rat(6, 5)}),
                    ValidationError);
    // Mass off by 1e-13 is renormalized to exactly 1.
    Rational eps = rat(1, 10000000000000L);
    auto d = PiecewiseConstantDensity::from_values({0, 1}, {1 + eps});
    CHECK(d.step().integral() == 1);
    CHECK_THROWS_AS(PiecewiseConstantDensity(StepFunction({rat(1, 4), 1}, {rat(4, 3)})),
                    ValidationError);
}

TEST_CASE("cdf_from_density on step densities") {
    DistributionFunction F = cdf_from_density(density_a());
    REQUIRE(F.as_pl().has_value());
    CHECK(F.eval(Real(rat(1, 3))) == Real(rat(1, 2)));
    CHECK(F.eval(Real(rat(1, 2))) == Real(rat(3, 4)));
    CHECK(F.eval(Real(rat(3, 4))) == Real(rat(7, 8)));
    CHECK(F.strictly_increasing());

    DistributionFunction U = cdf_from_density(PiecewiseConstantDensity::uniform());
    CHECK(PLFunction::sup_abs_difference(*U.as_pl(), PLFunction::identity()) == 0);

    // Density supported on the middle half only: flat CDF pieces at both ends.
    auto mid = PiecewiseConstantDensity::from_values({0, rat(1, 4), rat(3, 4), 1}, {0, 2, 0});
    DistributionFunction G = cdf_from_density(mid);
    CHECK(G.eval(Real(rat(1, 4))) == Real(0));
    CHECK(G.eval(Real(rat(3, 4))) == Real(1));
    CHECK(G.eval(Real(rat(1, 2))) == Real(rat(1, 2)));
    CHECK_FALSE(G.strictly_increasing());
}

TEST_CASE("invert_cdf exact and flat-segment rejection") {
    DistributionFunction F = cdf_from_density(density_a());
    CHECK(invert_cdf(F, Real(rat(3, 4))) == Real(rat(1, 2)));
    CHECK(invert_cdf(F, Real(rat(1, 2))) == Real(rat(1, 3)));
    CHECK(invert_cdf(F, Real(0)) == Real(0));
    CHECK(invert_cdf(F, Real(1)) == Real(1));
    CHECK(invert_cdf(DistributionFunction::identity(), Real::approx(0.3)).value() ==
          doctest::Approx(0.3).epsilon(1e-14));
    CHECK_THROWS_AS(invert_cdf(F, Real(2)), ValidationError);

    auto mid = PiecewiseConstantDensity::from_values({0, rat(1, 4), rat(3, 4), 1}, {0, 2, 0});
    DistributionFunction G = cdf_from_density(mid);
    CHECK(invert_cdf(G, Real(rat(1, 8))) == Real(rat(5, 16)));
    CHECK_THROWS_AS(invert_cdf(G, Real(0)), NonInvertibleCdf);
    CHECK_THROWS_AS(invert_cdf(G, Real(1)), NonInvertibleCdf);
    CHECK_THROWS_AS(G.as_homeomorphism(), NonInvertibleCdf);
}

TEST_CASE("invert after evaluate is the identity for strictly increasing cdfs") {
    DistributionFunction F = cdf_from_density(density_b());
    for (int k = 0; k <= 100; ++k) {
        double x = k / 100.0;
        CHECK(std::abs(F.invert(F.eval(x)) - x) <= 1e-10);
    }
}

TEST_CASE("numerical differentiation of the cdf recovers the density") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> coin(1, 9);
    std::vector<Rational> knots, raw;
    for (int i = 0; i <= 10; ++i) knots.push_back(rat(i, 10));
    Rational mass = 0;
    for (int i = 0; i < 10; ++i) {
        raw.push_back(rat(coin(rng)));
        mass += raw.back() * rat(1, 10);
    }
    for (auto& v : raw) v /= mass;
    auto d = PiecewiseConstantDensity::from_values(knots, raw);
    DistributionFunction F = cdf_from_density(d);
    double h = 1e-6;
    for (int i = 0; i < 10; ++i) {
        double x = (i + 0.5) / 10.0;
        double slope = (F.eval(x + h) - F.eval(x - h)) / (2 * h);
        CHECK(std::abs(slope - d.eval(x)) <= 1e-9);
    }
}

TEST_CASE("quadratic-segment cdfs evaluate and invert in closed form") {
    std::vector<CdfSegment> segs;
    segs.push_back({Interval(Real(0), Real(rat(1, 2))), BranchForm::quadratic(2, 0, 0)});
    segs.push_back({Interval(Real(rat(1, 2)), Real(1)), BranchForm::quadratic(-2, 4, -1)});
    DistributionFunction F = DistributionFunction::piecewise(segs);
    CHECK(F.strictly_increasing());
    CHECK(F.eval(Real(rat(1, 4))) == Real(rat(1, 8)));
    CHECK(F.eval(0.75) == doctest::Approx(0.875).epsilon(1e-14));
    CHECK(F.invert(Real(rat(1, 2))) == Real(rat(1, 2)));
    CHECK(F.invert(Real(rat(1, 8))) == Real(rat(1, 4)));
    CHECK(std::abs(F.invert(F.eval(0.9)) - 0.9) <= 1e-10);

    // Segments must be continuous and increasing.
    std::vector<CdfSegment> broken;
    broken.push_back({Interval(Real(0), Real(rat(1, 2))), BranchForm::affine(1, 0)});
    broken.push_back({Interval(Real(rat(1, 2)), Real(1)), BranchForm::affine(1, rat(-1, 4))});
    CHECK_THROWS_AS(DistributionFunction::piecewise(broken), ValidationError);
}

TEST_CASE("convex combinations") {
    DistributionFunction F1 = cdf_from_density(density_a());
    DistributionFunction F2 = cdf_from_density(density_b());

    SUBCASE("weights must lie strictly inside (0,1)") {
        CHECK_THROWS_AS(convex_combination(F1, F2, Real(0)), ValidationError);
        CHECK_THROWS_AS(convex_combination(F1, F2, Real(1)), ValidationError);
        CHECK_THROWS_AS(convex_combination(F1, F2, Real(rat(7, 5))), ValidationError);
    }

    SUBCASE("the 2/5 mix of the two four-branch cdfs is the identity") {
        DistributionFunction F = convex_combination(F1, F2, Real(rat(2, 5)));
        REQUIRE(F.is_mix());
        auto flat = F.as_pl();
        REQUIRE(flat.has_value());
        CHECK(PLFunction::sup_abs_difference(*flat, PLFunction::identity()) == 0);
        CHECK(F.eval(Real(rat(1, 3))) == Real(rat(1, 3)));
        CHECK(F.invert(Real(rat(2, 7))) == Real(rat(2, 7)));
    }

    SUBCASE("mixing a cdf with itself changes nothing") {
        DistributionFunction F = convex_combination(F1, F1, Real(rat(3, 4)));
        for (int k = 0; k <= 20; ++k) {
            double x = k / 20.0;
            CHECK(std::abs(F.eval(x) - F1.eval(x)) <= 1e-15);
        }
    }

    SUBCASE("the combination is affine in the weight") {
        DistributionFunction lo = convex_combination(F1, F2, Real::approx(1e-13));
        DistributionFunction hi = convex_combination(F1, F2, Real::approx(1 - 1e-13));
        for (int k = 0; k <= 20; ++k) {
            double x = k / 20.0;
            CHECK(std::abs(lo.eval(x) - F2.eval(x)) <= 1e-12);
            CHECK(std::abs(hi.eval(x) - F1.eval(x)) <= 1e-12);
        }
    }

    SUBCASE("mixes of strictly increasing parts invert by bisection") {
        std::vector<CdfSegment> segs;
        segs.push_back({Interval(Real(0), Real(rat(1, 2))), BranchForm::quadratic(2, 0, 0)});
        segs.push_back({Interval(Real(rat(1, 2)), Real(1)), BranchForm::quadratic(-2, 4, -1)});
        DistributionFunction Q = DistributionFunction::piecewise(segs);
        DistributionFunction M = convex_combination(Q, F2, Real(rat(3, 4)));
        CHECK_FALSE(M.as_pl().has_value());
        for (int k = 1; k < 20; ++k) {
            double u = k / 20.0;
            CHECK(std::abs(M.eval(M.invert(u)) - u) <= 1e-10);
        }
    }
}

TEST_CASE("markov structure discovery") {
    auto ms = markov_structure(fourbranch_a());
    REQUIRE(ms.partition.size() == 5);
    CHECK(ms.partition[1] == rat(3, 8));
    CHECK(ms.cells() == 4);
    CHECK(ms.incidence[0] == std::make_pair<size_t, size_t>(0, 1));
    CHECK(ms.incidence[1] == std::make_pair<size_t, size_t>(2, 3));
    CHECK(ms.incidence[2] == std::make_pair<size_t, size_t>(2, 3));
    CHECK(ms.incidence[3] == std::make_pair<size_t, size_t>(0, 1));

    // A breakpoint whose forward orbit never returns to the partition.
    std::vector<Branch> bad;
    bad.push_back(make_branch(Interval(Real(0), Real(rat(1, 2))), BranchForm::affine(rat(6, 5), 0)));
    bad.push_back(make_branch(Interval(Real(rat(1, 2)), Real(1)), BranchForm::affine(2, -1)));
    CHECK_THROWS_AS(markov_structure(PiecewiseMonotoneMap(std::move(bad)), 64), StructureError);
}

TEST_CASE("exact invariant densities of piecewise-linear markov maps") {
    SUBCASE("four-branch map with slope pattern 4/3,4") {
        auto f = markov_invariant_density(fourbranch_a());
        CHECK(l1_distance(f.step(), density_a().step()) == 0);
    }
    SUBCASE("four-branch map with slope pattern 3,3/2") {
        auto f = markov_invariant_density(fourbranch_b());
        CHECK(l1_distance(f.step(), density_b().step()) == 0);
    }
    SUBCASE("mixed-slope map preserves lebesgue") {
        auto f = markov_invariant_density(mixed_slope_map());
        CHECK(l1_distance(f.step(), StepFunction::constant(0, 1, 1)) == 0);
    }
    SUBCASE("tent map preserves lebesgue") {
        auto f = markov_invariant_density(tent());
        CHECK(l1_distance(f.step(), StepFunction::constant(0, 1, 1)) == 0);
    }
    SUBCASE("jump values trigger partition refinement") {
        // The middle branch jumps down to 1/4 at x=1/2, which is not a
        // breakpoint of the map; the structure pass has to add it.
        std::vector<Branch> br;
        br.push_back(make_branch(Interval(Real(0), Real(rat(1, 2))), BranchForm::affine(2, 0)));
        br.push_back(make_branch(Interval(Real(rat(1, 2)), Real(rat(3, 4))),
                                 BranchForm::affine(1, rat(-1, 4))));
        br.push_back(make_branch(Interval(Real(rat(3, 4)), Real(1)),
                                 BranchForm::affine(2, rat(-3, 2))));
        PiecewiseMonotoneMap jumpy(std::move(br));
        auto ms = markov_structure(jumpy);
        REQUIRE(ms.partition.size() == 5);
        CHECK(ms.partition[1] == rat(1, 4));
        auto f = markov_invariant_density(jumpy, ms);
        StepFunction expected({0, rat(1, 4), rat(1, 2), rat(3, 4), 1},
                              {rat(4, 5), rat(8, 5), rat(4, 5), rat(4, 5)});
        CHECK(l1_distance(f.step(), expected) == 0);
    }
}

TEST_CASE("decomposable map yields an ambiguity error with the full eigenbasis") {
    // Two side-by-side tents: [0,1/2] and [1/2,1] are each invariant.
    std::vector<Branch> br;
    br.push_back(make_branch(Interval(Real(0), Real(rat(1, 4))), BranchForm::affine(2, 0)));
    br.push_back(make_branch(Interval(Real(rat(1, 4)), Real(rat(1, 2))), BranchForm::affine(-2, 1)));
    br.push_back(make_branch(Interval(Real(rat(1, 2)), Real(rat(3, 4))), BranchForm::affine(2, rat(-1, 2))));
    br.push_back(make_branch(Interval(Real(rat(3, 4)), Real(1)), BranchForm::affine(-2, rat(5, 2))));
    PiecewiseMonotoneMap two_tents(std::move(br));
    bool caught = false;
    try {
        markov_invariant_density(two_tents);
    } catch (const AmbiguousInvariantDensity& e) {
        caught = true;
        CHECK(e.basis().size() == 2);
        for (const auto& b : e.basis()) CHECK(StepFunction::sup_abs(b) > 0);
    }
    CHECK(caught);
}

TEST_CASE("ulam approximation") {
    SUBCASE("tent map with 512 bins is uniform") {
        auto f = ulam_approximation(tent(), 512);
        CHECK(l1_distance(f.step(), StepFunction::constant(0, 1, 1)).get_d() <= 1e-3);
    }
    SUBCASE("four-branch map with 4096 bins approaches the exact density") {
        auto f = ulam_approximation(fourbranch_a(), 4096);
        CHECK(l1_distance(f.step(), density_a().step()).get_d() <= 1e-2);
    }
    SUBCASE("doubling the bin count does not worsen the approximation") {
        auto exact = markov_invariant_density(fourbranch_b());
        double prev = -1;
        for (size_t n = 256; n <= 4096; n *= 2) {
            auto f = ulam_approximation(fourbranch_b(), n);
            double err = l1_distance(f.step(), exact.step()).get_d();
            if (prev >= 0) CHECK(err <= prev + 1e-9);
            prev = err;
        }
    }
    SUBCASE("bin count validation") {
        CHECK_THROWS_AS(ulam_approximation(tent(), 1), ValidationError);
    }
}

TEST_CASE("kolmogorov-smirnov distance") {
    DistributionFunction id = DistributionFunction::identity();
    CHECK(ks_distance(id, {0.5}) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(ks_distance(id, {}), ValidationError);
    CHECK_THROWS_AS(ks_distance(id, {1.5}), ValidationError);

    SUBCASE("samples placed at exact quantiles sit within 1/(n+1)") {
        DistributionFunction F = cdf_from_density(density_a());
        std::vector<double> samples;
        int n = 99;
        for (int i = 1; i <= n; ++i) samples.push_back(F.invert(i / double(n + 1)));
        CHECK(ks_distance(F, samples) <= 1.0 / (n + 1) + 1e-12);
    }

    SUBCASE("long ergodic sample of the tent map matches lebesgue") {
        // Backward orbits sample the invariant measure without the
        // finite-precision collapse that forward tent orbits suffer.
        std::mt19937_64 rng(20240817);
        double y = 0.37;
        std::vector<double> samples;
        samples.reserve(1000000);
        for (int i = 0; i < 1000100; ++i) {
            bool left = (rng() >> 63) == 0;
            y = left ? y / 2 : 1 - y / 2;
            if (i >= 100) samples.push_back(y);
        }
        CHECK(ks_distance(id, samples) < 0.01);
    }
}
