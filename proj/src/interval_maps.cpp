#include "acim/interval_maps.hpp"

#include <algorithm>
#include <cmath>

#include "acim/errors.hpp"

namespace acim {

namespace {

constexpr double kMergeTol = 1e-12;
constexpr double kImageTol = 1e-9;

// Exact square root of a nonnegative rational, when both numerator and
// denominator are perfect squares.
std::optional<Rational> exact_sqrt(const Rational& q) {
    if (sgn(q) < 0) return std::nullopt;
    if (sgn(q) == 0) return Rational(0);
    const mpz_class& num = q.get_num();
    const mpz_class& den = q.get_den();
    if (!mpz_perfect_square_p(num.get_mpz_t()) || !mpz_perfect_square_p(den.get_mpz_t()))
        return std::nullopt;
    mpz_class rn, rd;
    mpz_sqrt(rn.get_mpz_t(), num.get_mpz_t());
    mpz_sqrt(rd.get_mpz_t(), den.get_mpz_t());
    return Rational(rn) / Rational(rd);
}

}  // namespace

Interval::Interval(Real lo_, Real hi_) : lo(lo_), hi(hi_) {
    if (compare(lo, hi) >= 0)
        throw ValidationError("degenerate interval [" + to_string(lo) + ", " + to_string(hi) + "]");
}

BranchForm BranchForm::affine(const Real& slope, const Real& intercept) {
    if (slope.is_zero()) throw ValidationError("affine branch with zero slope");
    BranchForm f;
    f.v_ = AffineForm{slope, intercept};
    return f;
}

BranchForm BranchForm::quadratic(const Real& a, const Real& b, const Real& c) {
    BranchForm f;
    f.v_ = QuadraticForm{a, b, c};
    return f;
}

BranchForm BranchForm::closure(std::function<double(double)> forward,
                               std::function<double(double)> inverse, double tolerance) {
    if (!forward || !inverse) throw ValidationError("closure branch needs both directions");
    BranchForm f;
    f.v_ = MonotoneClosureForm{std::move(forward), std::move(inverse), tolerance};
    return f;
}

BranchForm BranchForm::composite(BranchForm outer, BranchForm inner) {
    BranchForm f;
    f.v_ = CompositeForm{std::make_shared<BranchForm>(std::move(outer)),
                         std::make_shared<BranchForm>(std::move(inner))};
    return f;
}

Real BranchForm::eval(const Real& x) const {
    if (auto* a = std::get_if<AffineForm>(&v_)) return a->slope * x + a->intercept;
    if (auto* q = std::get_if<QuadraticForm>(&v_)) return (q->a * x + q->b) * x + q->c;
    if (auto* c = std::get_if<MonotoneClosureForm>(&v_)) return Real::approx(c->forward(x.value()));
    auto& comp = std::get<CompositeForm>(v_);
    return comp.outer->eval(comp.inner->eval(x));
}

double BranchForm::eval(double x) const {
    if (auto* a = std::get_if<AffineForm>(&v_)) return a->slope.value() * x + a->intercept.value();
    if (auto* q = std::get_if<QuadraticForm>(&v_)) return (q->a.value() * x + q->b.value()) * x + q->c.value();
    if (auto* c = std::get_if<MonotoneClosureForm>(&v_)) return c->forward(x);
    auto& comp = std::get<CompositeForm>(v_);
    return comp.outer->eval(comp.inner->eval(x));
}

Real BranchForm::invert(const Real& y, const Real& lo, const Real& hi) const {
    if (auto* a = std::get_if<AffineForm>(&v_)) return (y - a->intercept) / a->slope;
    if (auto* q = std::get_if<QuadraticForm>(&v_)) {
        if (q->a.is_zero()) {
            if (q->b.is_zero()) throw StructureError("inverting a constant quadratic form");
            return (y - q->c) / q->b;
        }
        // a x^2 + b x + (c - y) = 0
        Real disc = q->b * q->b - Real(4) * q->a * (q->c - y);
        if (disc.exact() && y.exact()) {
            if (sgn(disc.rational()) < 0) throw StructureError("quadratic inversion: negative discriminant");
            if (auto s = exact_sqrt(disc.rational())) {
                Real root1 = (-q->b + Real(*s)) / (Real(2) * q->a);
                Real root2 = (-q->b - Real(*s)) / (Real(2) * q->a);
                if (lo <= root1 && root1 <= hi) return root1;
                if (lo <= root2 && root2 <= hi) return root2;
                throw StructureError("quadratic inversion: no root in branch domain");
            }
        }
        double d = disc.value();
        if (d < 0) {
            if (d < -1e-14) throw StructureError("quadratic inversion: negative discriminant");
            d = 0;
        }
        double sq = std::sqrt(d);
        double a2 = 2 * q->a.value();
        double r1 = (-q->b.value() + sq) / a2;
        double r2 = (-q->b.value() - sq) / a2;
        double lod = lo.value(), hid = hi.value();
        double slack = 1e-9 * (1 + std::abs(hid - lod));
        double root;
        bool ok1 = r1 >= lod - slack && r1 <= hid + slack;
        bool ok2 = r2 >= lod - slack && r2 <= hid + slack;
        if (ok1 && ok2) {
            // Near an endpoint that coincides with the vertex the two roots
            // straddle the domain; take the one lying deeper inside it.
            double e1 = std::max({lod - r1, r1 - hid, 0.0});
            double e2 = std::max({lod - r2, r2 - hid, 0.0});
            if (e1 < e2)
                root = r1;
            else if (e2 < e1)
                root = r2;
            else if (std::abs(r1 - r2) < slack)
                root = r1;
            else
                throw StructureError("quadratic inversion: ambiguous root");
        } else if (ok1)
            root = r1;
        else if (ok2)
            root = r2;
        else
            throw StructureError("quadratic inversion: no root in branch domain");
        return Real::approx(std::clamp(root, lod, hid));
    }
    if (auto* c = std::get_if<MonotoneClosureForm>(&v_)) {
        double x = c->inverse(y.value());
        return Real::approx(std::clamp(x, lo.value(), hi.value()));
    }
    auto& comp = std::get<CompositeForm>(v_);
    Real m0 = comp.inner->eval(lo);
    Real m1 = comp.inner->eval(hi);
    const Real& mlo = compare(m0, m1) <= 0 ? m0 : m1;
    const Real& mhi = compare(m0, m1) <= 0 ? m1 : m0;
    Real mid = comp.outer->invert(y, mlo, mhi);
    return comp.inner->invert(mid, lo, hi);
}

bool BranchForm::exact() const {
    if (auto* a = std::get_if<AffineForm>(&v_)) return a->slope.exact() && a->intercept.exact();
    if (auto* q = std::get_if<QuadraticForm>(&v_)) return q->a.exact() && q->b.exact() && q->c.exact();
    if (std::get_if<MonotoneClosureForm>(&v_)) return false;
    auto& comp = std::get<CompositeForm>(v_);
    return comp.outer->exact() && comp.inner->exact();
}

double BranchForm::tolerance() const {
    if (std::get_if<AffineForm>(&v_) || std::get_if<QuadraticForm>(&v_)) return 0.0;
    if (auto* c = std::get_if<MonotoneClosureForm>(&v_)) return c->tolerance;
    auto& comp = std::get<CompositeForm>(v_);
    return comp.outer->tolerance() + comp.inner->tolerance();
}

std::string BranchForm::kind() const {
    if (std::get_if<AffineForm>(&v_)) return "affine";
    if (std::get_if<QuadraticForm>(&v_)) return "quadratic";
    if (std::get_if<MonotoneClosureForm>(&v_)) return "closure";
    return "composite";
}

Branch::Branch(Interval domain_, BranchForm form_, Monotonicity mono)
    : domain(domain_),
      form(std::move(form_)),
      monotonicity(mono),
      value_at_lo(form.eval(domain.lo)),
      value_at_hi(form.eval(domain.hi)) {
    // Endpoint ordering must agree with the declared monotonicity.
    int c = compare(value_at_lo, value_at_hi);
    if (mono == Monotonicity::Increasing && c >= 0)
        throw ValidationError("branch declared increasing but endpoint values do not increase");
    if (mono == Monotonicity::Decreasing && c <= 0)
        throw ValidationError("branch declared decreasing but endpoint values do not decrease");
    if (auto* a = form.as_affine()) {
        bool pos = compare(a->slope, Real(0)) > 0;
        if (pos != (mono == Monotonicity::Increasing))
            throw ValidationError("affine slope sign contradicts declared monotonicity");
    }
    if (auto* q = form.as_quadratic(); q && !q->a.is_zero()) {
        // Strict monotonicity on [lo,hi] means the vertex -b/2a lies outside
        // the open interval; the derivative may vanish at an endpoint.
        Real vertex = -q->b / (Real(2) * q->a);
        if (domain.lo < vertex && vertex < domain.hi)
            throw ValidationError("quadratic branch not strictly monotone on its domain");
    }
}

Interval Branch::image() const {
    return compare(value_at_lo, value_at_hi) < 0 ? Interval(value_at_lo, value_at_hi)
                                                 : Interval(value_at_hi, value_at_lo);
}

Real Branch::eval(const Real& x) const { return form.eval(x); }
double Branch::eval(double x) const { return form.eval(x); }

Branch make_branch(Interval domain, BranchForm form) {
    Real v0 = form.eval(domain.lo);
    Real v1 = form.eval(domain.hi);
    Monotonicity mono = compare(v0, v1) < 0 ? Monotonicity::Increasing : Monotonicity::Decreasing;
    return Branch(domain, std::move(form), mono);
}

Real branch_inverse(const Branch& b, const Real& y) {
    Interval img = b.image();
    double tol = b.form.tolerance() + 1e-12;
    if (y < img.lo) {
        if (img.lo.value() - y.value() > tol)
            throw ValidationError("branch_inverse: y=" + to_string(y) + " below branch image");
        return b.monotonicity == Monotonicity::Increasing ? b.domain.lo : b.domain.hi;
    }
    if (y > img.hi) {
        if (y.value() - img.hi.value() > tol)
            throw ValidationError("branch_inverse: y=" + to_string(y) + " above branch image");
        return b.monotonicity == Monotonicity::Increasing ? b.domain.hi : b.domain.lo;
    }
    return b.form.invert(y, b.domain.lo, b.domain.hi);
}

Real extended_inverse(const Branch& b, const Real& x) {
    if (x < Real(0) || x > Real(1))
        throw ValidationError("extended_inverse: x outside [0,1]");
    if (b.monotonicity == Monotonicity::Increasing) {
        if (x <= b.value_at_lo) return b.domain.lo;
        if (x >= b.value_at_hi) return b.domain.hi;
    } else {
        if (x <= b.value_at_hi) return b.domain.hi;
        if (x >= b.value_at_lo) return b.domain.lo;
    }
    return b.form.invert(x, b.domain.lo, b.domain.hi);
}

PLFunction extended_inverse_pl(const Branch& b) {
    if (!b.form.as_affine() || !b.form.exact() || !b.domain.lo.exact() || !b.domain.hi.exact())
        throw ValidationError("extended_inverse_pl needs an exact affine branch");
    Rational a = b.domain.lo.rational();
    Rational bb = b.domain.hi.rational();
    Rational v0 = b.value_at_lo.rational();
    Rational v1 = b.value_at_hi.rational();
    if (v0 > v1) std::swap(v0, v1);
    bool inc = b.monotonicity == Monotonicity::Increasing;
    std::vector<Rational> xs = {0};
    std::vector<Rational> ys = {inc ? a : bb};
    auto push = [&](const Rational& x, const Rational& y) {
        if (x > xs.back()) {
            xs.push_back(x);
            ys.push_back(y);
        }
    };
    push(v0, inc ? a : bb);
    push(v1, inc ? bb : a);
    push(1, inc ? bb : a);
    return PLFunction(std::move(xs), std::move(ys));
}

PiecewiseMonotoneMap::PiecewiseMonotoneMap(std::vector<Branch> branches)
    : branches_(std::move(branches)) {
    if (branches_.empty()) throw ValidationError("map needs at least one branch");
    const Real& first = branches_.front().domain.lo;
    if (first != Real(0)) {
        if (std::abs(first.value()) > kMergeTol || first.exact())
            throw ValidationError("map must start at 0");
    }
    const Real& last = branches_.back().domain.hi;
    if (last != Real(1)) {
        if (std::abs(last.value() - 1.0) > kMergeTol || last.exact())
            throw ValidationError("map must end at 1");
    }
    breakpoints_.push_back(branches_.front().domain.lo);
    for (size_t i = 0; i < branches_.size(); ++i) {
        if (i > 0) {
            const Real& prev = branches_[i - 1].domain.hi;
            const Real& next = branches_[i].domain.lo;
            if (prev != next) {
                bool both_exact = prev.exact() && next.exact();
                if (both_exact || std::abs(prev.value() - next.value()) > kMergeTol)
                    throw ValidationError("branch domains do not tile [0,1] (gap near " +
                                          to_string(prev) + ")");
            }
        }
        Interval img = branches_[i].image();
        bool exact_img = img.lo.exact() && img.hi.exact();
        if (exact_img) {
            if (img.lo < Real(0) || img.hi > Real(1))
                throw ValidationError("branch image leaves [0,1]");
        } else if (img.lo.value() < -kImageTol || img.hi.value() > 1 + kImageTol) {
            throw ValidationError("branch image leaves [0,1]");
        }
        breakpoints_.push_back(branches_[i].domain.hi);
    }
}

size_t PiecewiseMonotoneMap::branch_index(const Real& x) const {
    if (x < Real(0) || x > Real(1)) {
        if (x.exact() || x.value() < -kMergeTol || x.value() > 1 + kMergeTol)
            throw ValidationError("evaluation outside [0,1]: x=" + to_string(x));
    }
    // First breakpoint (from index 1 on) that is >= x owns x on its left.
    size_t lo = 1, hi = breakpoints_.size() - 1;
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (compare(breakpoints_[mid], x) >= 0) hi = mid; else lo = mid + 1;
    }
    return lo - 1;
}

Real PiecewiseMonotoneMap::operator()(const Real& x) const {
    return branches_[branch_index(x)].eval(x);
}

double PiecewiseMonotoneMap::eval(double x) const {
    return branches_[branch_index(Real::approx(x))].eval(x);
}

bool PiecewiseMonotoneMap::all_affine() const {
    return std::all_of(branches_.begin(), branches_.end(),
                       [](const Branch& b) { return b.form.as_affine() != nullptr; });
}

bool PiecewiseMonotoneMap::exact() const {
    for (const auto& b : branches_)
        if (!b.form.exact() || !b.domain.lo.exact() || !b.domain.hi.exact()) return false;
    return true;
}

std::optional<PLFunction> PiecewiseMonotoneMap::as_pl() const {
    if (!all_affine() || !exact()) return std::nullopt;
    std::vector<Rational> xs, ys;
    xs.push_back(branches_.front().domain.lo.rational());
    ys.push_back(branches_.front().value_at_lo.rational());
    for (size_t i = 0; i < branches_.size(); ++i) {
        if (i > 0 && branches_[i].value_at_lo != branches_[i - 1].value_at_hi)
            return std::nullopt;  // jump: not representable as one continuous graph
        xs.push_back(branches_[i].domain.hi.rational());
        ys.push_back(branches_[i].value_at_hi.rational());
    }
    return PLFunction(std::move(xs), std::move(ys));
}

PiecewiseMonotoneMap PiecewiseMonotoneMap::from_pl_graph(const PLFunction& f) {
    PLFunction g = f.simplified();
    std::vector<Branch> bs;
    for (size_t i = 0; i + 1 < g.xs.size(); ++i) {
        Rational slope = (g.ys[i + 1] - g.ys[i]) / (g.xs[i + 1] - g.xs[i]);
        if (sgn(slope) == 0)
            throw ValidationError("graph has a flat segment; branches must be strictly monotone");
        Rational intercept = g.ys[i] - slope * g.xs[i];
        bs.push_back(make_branch(Interval(Real(g.xs[i]), Real(g.xs[i + 1])),
                                 BranchForm::affine(Real(slope), Real(intercept))));
    }
    return PiecewiseMonotoneMap(std::move(bs));
}

namespace {

// Union of two breakpoint lists. Exact values compare exactly; an inexact
// value within kMergeTol of an exact one collapses onto the exact one.
std::vector<Real> merge_breakpoints(const std::vector<Real>& a, const std::vector<Real>& b) {
    std::vector<Real> all = a;
    all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end(), [](const Real& x, const Real& y) { return compare(x, y) < 0; });
    std::vector<Real> out;
    for (const auto& x : all) {
        if (out.empty()) {
            out.push_back(x);
            continue;
        }
        Real& last = out.back();
        bool same = (last.exact() && x.exact()) ? last == x
                                                : std::abs(last.value() - x.value()) <= kMergeTol;
        if (!same) {
            out.push_back(x);
        } else if (!last.exact() && x.exact()) {
            last = x;
        }
    }
    return out;
}

PiecewiseMonotoneMap refine_to(const PiecewiseMonotoneMap& m, const std::vector<Real>& cuts) {
    std::vector<Branch> bs;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        const Real& lo = cuts[i];
        const Real& hi = cuts[i + 1];
        Real mid = Real::approx((lo.value() + hi.value()) / 2);
        size_t j = m.branch_index(mid);
        const Branch& src = m.branches()[j];
        if (lo.value() < src.domain.lo.value() - kMergeTol ||
            hi.value() > src.domain.hi.value() + kMergeTol)
            throw StructureError("refinement cell straddles a branch boundary");
        bs.push_back(Branch(Interval(lo, hi), src.form, src.monotonicity));
    }
    return PiecewiseMonotoneMap(std::move(bs));
}

}  // namespace

std::pair<PiecewiseMonotoneMap, PiecewiseMonotoneMap> common_refinement(
    const PiecewiseMonotoneMap& m1, const PiecewiseMonotoneMap& m2) {
    std::vector<Real> cuts = merge_breakpoints(m1.breakpoints(), m2.breakpoints());
    return {refine_to(m1, cuts), refine_to(m2, cuts)};
}

Homeomorphism Homeomorphism::identity() {
    return from_pl(PLFunction::identity());
}

Homeomorphism Homeomorphism::from_pl(const PLFunction& f) {
    if (!f.strictly_increasing())
        throw ValidationError("homeomorphism must be strictly increasing");
    if (f.x_lo() != 0 || f.x_hi() != 1 || f.ys.front() != 0 || f.ys.back() != 1)
        throw ValidationError("homeomorphism must map [0,1] onto [0,1]");
    Homeomorphism h;
    PLFunction inv = f.inverse();
    h.forward = [f](double x) { return f.eval_double(x); };
    h.inverse = [inv](double y) { return inv.eval_double(y); };
    h.tolerance = 0.0;
    h.exact_pl = f;
    return h;
}

Envelope validate_envelope(const PiecewiseMonotoneMap& tau1, const PiecewiseMonotoneMap& tau2,
                           size_t grid, double tolerance) {
    auto [lo, hi] = common_refinement(tau1, tau2);
    for (size_t i = 0; i < lo.branch_count(); ++i) {
        if (lo.branches()[i].monotonicity != hi.branches()[i].monotonicity)
            throw ValidationError("envelope monotonicity mismatch on piece " + std::to_string(i) +
                                  " [" + to_string(lo.branches()[i].domain.lo) + ", " +
                                  to_string(lo.branches()[i].domain.hi) + "]");
        auto check = [&](const Real& a, const Real& b, const Real& at) {
            bool bad = (a.exact() && b.exact()) ? a > b : a.value() > b.value() + tolerance;
            if (bad)
                throw ValidationError("envelope ordering violated at x=" + to_string(at) +
                                      " (lower=" + to_string(a) + ", upper=" + to_string(b) + ")");
        };
        check(lo.branches()[i].value_at_lo, hi.branches()[i].value_at_lo, lo.branches()[i].domain.lo);
        check(lo.branches()[i].value_at_hi, hi.branches()[i].value_at_hi, lo.branches()[i].domain.hi);
    }
    for (size_t k = 0; k < grid; ++k) {
        double x = static_cast<double>(k) / static_cast<double>(grid - 1);
        if (lo.eval(x) > hi.eval(x) + tolerance)
            throw ValidationError("envelope ordering violated at x=" + std::to_string(x));
    }
    return Envelope{std::move(lo), std::move(hi)};
}

namespace {

// ys mapped through y -> s*y + t.
PLFunction pl_affine_image(const PLFunction& f, const Rational& s, const Rational& t) {
    PLFunction g = f;
    for (auto& y : g.ys) y = s * y + t;
    return g;
}

void append_pl_as_branches(const PLFunction& pl, std::vector<Branch>& out) {
    PLFunction g = pl.simplified();
    for (size_t i = 0; i + 1 < g.xs.size(); ++i) {
        Rational slope = (g.ys[i + 1] - g.ys[i]) / (g.xs[i + 1] - g.xs[i]);
        if (sgn(slope) == 0)
            throw StructureError("conjugation produced a flat segment");
        Rational intercept = g.ys[i] - slope * g.xs[i];
        out.push_back(make_branch(Interval(Real(g.xs[i]), Real(g.xs[i + 1])),
                                  BranchForm::affine(Real(slope), Real(intercept))));
    }
}

}  // namespace

PiecewiseMonotoneMap conjugate(const PiecewiseMonotoneMap& map, const Homeomorphism& g) {
    if (!g.forward || !g.inverse) throw ValidationError("conjugate: homeomorphism lacks callables");
    double tol = std::max(g.tolerance, 1e-9);
    if (std::abs(g.forward(0.0)) > tol || std::abs(g.forward(1.0) - 1.0) > tol)
        throw ValidationError("conjugate: g does not map [0,1] onto [0,1]");

    if (g.exact_pl && map.all_affine() && map.exact()) {
        const PLFunction& gpl = *g.exact_pl;
        PLFunction ginv = gpl.inverse();
        std::vector<Branch> out;
        for (const auto& br : map.branches()) {
            Rational a = br.domain.lo.rational();
            Rational b = br.domain.hi.rational();
            Rational xa = ginv(a), xb = ginv(b);
            PLFunction inner = gpl.restrict(xa, xb);
            const AffineForm* af = br.form.as_affine();
            PLFunction mid = pl_affine_image(inner, af->slope.rational(), af->intercept.rational());
            PLFunction piece = PLFunction::compose(ginv, mid);
            append_pl_as_branches(piece, out);
        }
        return PiecewiseMonotoneMap(std::move(out));
    }

    BranchForm g_form = BranchForm::closure(g.forward, g.inverse, g.tolerance);
    BranchForm ginv_form = BranchForm::closure(g.inverse, g.forward, g.tolerance);
    std::vector<Branch> out;
    Real prev(0);
    for (size_t i = 0; i < map.branch_count(); ++i) {
        const Branch& br = map.branches()[i];
        Real next = (i + 1 == map.branch_count()) ? Real(1)
                                                  : Real::approx(g.inverse(br.domain.hi.value()));
        BranchForm form = BranchForm::composite(ginv_form, BranchForm::composite(br.form, g_form));
        out.push_back(Branch(Interval(prev, next), std::move(form), br.monotonicity));
        prev = next;
    }
    return PiecewiseMonotoneMap(std::move(out));
}

}  // namespace acim
