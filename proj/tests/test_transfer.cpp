#include <doctest.h>

#include <cmath>
#include <random>

#include "acim/errors.hpp"
#include "acim/transfer.hpp"

using namespace acim;

namespace {

PiecewiseMonotoneMap fourbranch_a() {
    return PiecewiseMonotoneMap::from_pl_graph(PLFunction(
        {0, rat(3, 8), rat(1, 2), rat(5, 8), 1}, {0, rat(1, 2), 1, rat(1, 2), 0}));
}

PiecewiseMonotoneMap fourbranch_b() {
    return PiecewiseMonotoneMap::from_pl_graph(PLFunction(
        {0, rat(1, 6), rat(1, 2), rat(5, 6), 1}, {0, rat(1, 2), 1, rat(1, 2), 0}));
}

PiecewiseMonotoneMap mixed_slope_map() {
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

DistributionFunction quadratic_cdf() {
    std::vector<CdfSegment> segs;
    segs.push_back({Interval(Real(0), Real(rat(1, 2))), BranchForm::quadratic(2, 0, 0)});
    segs.push_back({Interval(Real(rat(1, 2)), Real(1)), BranchForm::quadratic(-2, 4, -1)});
    return DistributionFunction::piecewise(segs);
}

PiecewiseConstantDensity random_density(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> coin(1, 9);
    std::vector<Rational> knots, raw;
    for (int i = 0; i <= 8; ++i) knots.push_back(rat(i, 8));
    Rational mass = 0;
    for (int i = 0; i < 8; ++i) {
        raw.push_back(rat(coin(rng)));
        mass += raw.back() * rat(1, 8);
    }
    for (auto& v : raw) v /= mass;
    return PiecewiseConstantDensity::from_values(knots, raw);
}

}  // namespace

TEST_CASE("density-form transfer operator") {
    SUBCASE("uniform maps to the invariant density of the first four-branch map") {
        auto out = fp_apply(fourbranch_a(), PiecewiseConstantDensity::uniform());
        CHECK(l1_distance(out.step(), density_a().step()) == 0);
    }
    SUBCASE("the mixed-slope map preserves the uniform density") {
        auto out = fp_apply(mixed_slope_map(), PiecewiseConstantDensity::uniform());
        CHECK(l1_distance(out.step(), StepFunction::constant(0, 1, 1)) == 0);
    }
    SUBCASE("a single identity branch changes nothing") {
        auto id_map = PiecewiseMonotoneMap::from_pl_graph(PLFunction::identity());
        auto out = fp_apply(id_map, density_a());
        CHECK(l1_distance(out.step(), density_a().step()) == 0);
    }
    SUBCASE("the exact invariant densities are fixed points") {
        CHECK(l1_distance(fp_apply(fourbranch_a(), density_a()).step(), density_a().step()) == 0);
        CHECK(l1_distance(fp_apply(fourbranch_b(), density_b()).step(), density_b().step()) == 0);
    }
    SUBCASE("non-affine branches are rejected") {
        std::vector<Branch> br;
        br.push_back(make_branch(Interval(Real(0), Real(1)), BranchForm::quadratic(1, 0, 0)));
        PiecewiseMonotoneMap quad(std::move(br));
        CHECK_THROWS_AS(fp_apply(quad, PiecewiseConstantDensity::uniform()), ValidationError);
    }
}

TEST_CASE("transfer operator conserves mass, positivity, and linearity") {
    std::mt19937_64 rng(99);
    auto m = fourbranch_b();
    for (int trial = 0; trial < 10; ++trial) {
        auto f = random_density(rng);
        auto g = random_density(rng);
        auto pf = fp_apply(m, f);
        auto pg = fp_apply(m, g);
        CHECK(pf.step().integral() == 1);
        for (const auto& v : pf.step().values) CHECK(sgn(v) >= 0);

        // P(af + bg) = a Pf + b Pg with a = 1/3, b = 2/3, exactly.
        auto blend_in = PiecewiseConstantDensity(
            StepFunction::add(f.step().scaled(rat(1, 3)), g.step().scaled(rat(2, 3))));
        auto blend_out = fp_apply(m, blend_in);
        auto expected = StepFunction::add(pf.step().scaled(rat(1, 3)), pg.step().scaled(rat(2, 3)));
        CHECK(l1_distance(blend_out.step(), expected) == 0);
    }
}

TEST_CASE("cdf-form transfer operator") {
    SUBCASE("tent map fixes the identity cdf") {
        auto G = cdf_pushforward(tent(), DistributionFunction::identity(), 257);
        for (int k = 0; k <= 64; ++k) {
            double x = k / 64.0;
            CHECK(std::abs(G.eval(x) - x) <= 1e-14);
        }
    }
    SUBCASE("conjugated tent fixes the quadratic cdf") {
        DistributionFunction F = quadratic_cdf();
        auto conj = conjugate(tent(), F.as_homeomorphism());
        auto G = cdf_pushforward(conj, F);
        // Compare at the tabulation's own nodes. Between nodes the tabulated
        // curve interpolates linearly and picks up O(h^2) error against the
        // curved target, which says nothing about the transfer computation.
        const auto* t = G.tab();
        REQUIRE(t != nullptr);
        REQUIRE(t->xs.size() >= 16385);
        for (size_t i = 0; i < t->xs.size(); ++i) {
            CHECK(std::abs(t->Fs[i] - F.eval(t->xs[i])) <= 1e-10);
        }
    }
    SUBCASE("pushforward commutes with cdf_from_density for affine maps") {
        auto m = fourbranch_b();
        auto f = density_a();
        auto lhs = cdf_pushforward(m, cdf_from_density(f), 4097);
        auto rhs = cdf_from_density(fp_apply(m, f));
        for (int k = 0; k <= 1000; ++k) {
            double x = k / 1000.0;
            CHECK(std::abs(lhs.eval(x) - rhs.eval(x)) <= 1e-10);
        }
    }
    SUBCASE("output is a valid nondecreasing cdf") {
        std::vector<Branch> br;
        br.push_back(make_branch(Interval(Real(0), Real(rat(1, 4))), BranchForm::quadratic(4, 0, 0)));
        br.push_back(make_branch(Interval(Real(rat(1, 4)), Real(rat(1, 2))),
                                 BranchForm::affine(2, rat(-1, 4))));
        br.push_back(make_branch(Interval(Real(rat(1, 2)), Real(rat(3, 4))),
                                 BranchForm::affine(-2, rat(7, 4))));
        br.push_back(make_branch(Interval(Real(rat(3, 4)), Real(1)), BranchForm::quadratic(4, -8, 4)));
        PiecewiseMonotoneMap qe(std::move(br));
        auto G = cdf_pushforward(qe, quadratic_cdf(), 2049);
        CHECK(G.eval(0.0) == 0.0);
        CHECK(G.eval(1.0) == 1.0);
        const auto* t = G.tab();
        REQUIRE(t != nullptr);
        for (size_t i = 0; i + 1 < t->Fs.size(); ++i) CHECK(t->Fs[i] <= t->Fs[i + 1]);
    }
}

TEST_CASE("invariance checking") {
    SUBCASE("tent and identity: exact invariance") {
        auto r = check_invariance(tent(), DistributionFunction::identity());
        CHECK(r.exact);
        CHECK(r.sup_error == 0.0);
    }
    SUBCASE("second four-branch map and its own cdf: exact invariance") {
        auto r = check_invariance(fourbranch_b(), cdf_from_density(density_b()));
        CHECK(r.exact);
        CHECK(r.sup_error == 0.0);
    }
    SUBCASE("first four-branch map does not fix lebesgue") {
        auto r = check_invariance(fourbranch_a(), DistributionFunction::identity());
        CHECK_FALSE(r.exact);
        CHECK(r.sup_error == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(r.worst_point == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(r.sup_error >= 0.125);
    }
    SUBCASE("closure-branch maps go through the sampled path") {
        DistributionFunction F = quadratic_cdf();
        auto conj = conjugate(tent(), F.as_homeomorphism());
        auto r = check_invariance(conj, F, 4097);
        CHECK_FALSE(r.exact);
        CHECK(r.sup_error <= 1e-10);
        CHECK(r.grid_size >= 4097);
    }
}
