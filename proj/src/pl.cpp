#include "acim/pl.hpp"

#include <algorithm>

#include "acim/errors.hpp"

namespace acim {

std::vector<Rational> sorted_unique(std::vector<Rational> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

namespace {

void check_strictly_increasing(const std::vector<Rational>& xs, const char* what) {
    if (xs.size() < 2) throw ValidationError(std::string(what) + ": need at least two knots");
    for (size_t i = 0; i + 1 < xs.size(); ++i)
        if (cmp(xs[i], xs[i + 1]) >= 0)
            throw ValidationError(std::string(what) + ": knots must be strictly increasing");
}

// Index of the segment [xs[i], xs[i+1]] containing x.
size_t segment_index(const std::vector<Rational>& xs, const Rational& x) {
    if (cmp(x, xs.front()) < 0 || cmp(x, xs.back()) > 0)
        throw ValidationError("evaluation outside domain: x=" + x.get_str() +
                              " not in [" + xs.front().get_str() + ", " + xs.back().get_str() + "]");
    size_t idx = std::upper_bound(xs.begin(), xs.end(), x) - xs.begin();
    if (idx == 0) return 0;
    if (idx >= xs.size()) return xs.size() - 2;
    return idx - 1;
}

}  // namespace

PLFunction::PLFunction(std::vector<Rational> xs_, std::vector<Rational> ys_)
    : xs(std::move(xs_)), ys(std::move(ys_)) {
    check_strictly_increasing(xs, "piecewise-linear function");
    if (ys.size() != xs.size())
        throw ValidationError("piecewise-linear function: knot/value count mismatch");
}

PLFunction PLFunction::constant(const Rational& a, const Rational& b, const Rational& v) {
    return PLFunction({a, b}, {v, v});
}

PLFunction PLFunction::identity(const Rational& a, const Rational& b) {
    return PLFunction({a, b}, {a, b});
}

PLFunction PLFunction::affine(const Rational& a, const Rational& b,
                              const Rational& c1, const Rational& c0) {
    return PLFunction({a, b}, {c1 * a + c0, c1 * b + c0});
}

Rational PLFunction::operator()(const Rational& x) const {
    size_t i = segment_index(xs, x);
    if (cmp(x, xs[i]) == 0) return ys[i];
    if (cmp(x, xs[i + 1]) == 0) return ys[i + 1];
    return ys[i] + (ys[i + 1] - ys[i]) * (x - xs[i]) / (xs[i + 1] - xs[i]);
}

double PLFunction::eval_double(double x) const {
    double lo = xs.front().get_d(), hi = xs.back().get_d();
    if (x <= lo) return ys.front().get_d();
    if (x >= hi) return ys.back().get_d();
    // Locate with doubles, then interpolate in doubles.
    size_t n = xs.size();
    size_t a = 0, b = n - 1;
    while (b - a > 1) {
        size_t m = (a + b) / 2;
        if (xs[m].get_d() <= x) a = m; else b = m;
    }
    double xa = xs[a].get_d(), xb = xs[b].get_d();
    double ya = ys[a].get_d(), yb = ys[b].get_d();
    if (xb == xa) return ya;
    return ya + (yb - ya) * (x - xa) / (xb - xa);
}

Rational PLFunction::min_value() const {
    return *std::min_element(ys.begin(), ys.end());
}

Rational PLFunction::max_value() const {
    return *std::max_element(ys.begin(), ys.end());
}

bool PLFunction::nondecreasing() const {
    for (size_t i = 0; i + 1 < ys.size(); ++i)
        if (cmp(ys[i], ys[i + 1]) > 0) return false;
    return true;
}

bool PLFunction::nonincreasing() const {
    for (size_t i = 0; i + 1 < ys.size(); ++i)
        if (cmp(ys[i], ys[i + 1]) < 0) return false;
    return true;
}

bool PLFunction::strictly_increasing() const {
    for (size_t i = 0; i + 1 < ys.size(); ++i)
        if (cmp(ys[i], ys[i + 1]) >= 0) return false;
    return true;
}

bool PLFunction::strictly_decreasing() const {
    for (size_t i = 0; i + 1 < ys.size(); ++i)
        if (cmp(ys[i], ys[i + 1]) <= 0) return false;
    return true;
}

PLFunction PLFunction::inverse() const {
    if (strictly_increasing()) {
        PLFunction g;
        g.xs = ys;
        g.ys = xs;
        return g;
    }
    if (strictly_decreasing()) {
        PLFunction g;
        g.xs.assign(ys.rbegin(), ys.rend());
        g.ys.assign(xs.rbegin(), xs.rend());
        return g;
    }
    throw StructureError("inverse of a non-monotone piecewise-linear function");
}

PLFunction PLFunction::restrict(const Rational& a, const Rational& b) const {
    if (cmp(a, b) >= 0) throw ValidationError("restrict: empty interval");
    PLFunction f = with_knot(a).with_knot(b);
    size_t i0 = std::lower_bound(f.xs.begin(), f.xs.end(), a) - f.xs.begin();
    size_t i1 = std::lower_bound(f.xs.begin(), f.xs.end(), b) - f.xs.begin();
    PLFunction g;
    g.xs.assign(f.xs.begin() + i0, f.xs.begin() + i1 + 1);
    g.ys.assign(f.ys.begin() + i0, f.ys.begin() + i1 + 1);
    return g;
}

PLFunction PLFunction::with_knot(const Rational& x) const {
    if (std::binary_search(xs.begin(), xs.end(), x)) return *this;
    PLFunction f = *this;
    size_t i = segment_index(xs, x);
    Rational y = (*this)(x);
    f.xs.insert(f.xs.begin() + i + 1, x);
    f.ys.insert(f.ys.begin() + i + 1, y);
    return f;
}

PLFunction PLFunction::with_knots(const std::vector<Rational>& ks) const {
    PLFunction f = *this;
    for (const auto& k : ks) f = f.with_knot(k);
    return f;
}

PLFunction PLFunction::simplified() const {
    PLFunction f;
    f.xs.push_back(xs.front());
    f.ys.push_back(ys.front());
    for (size_t i = 1; i + 1 < xs.size(); ++i) {
        const Rational& xa = f.xs.back();
        const Rational& ya = f.ys.back();
        // Collinear with the neighbors: (ys[i]-ya)*(xs[i+1]-xs[i]) == (ys[i+1]-ys[i])*(xs[i]-xa)
        Rational lhs = (ys[i] - ya) * (xs[i + 1] - xs[i]);
        Rational rhs = (ys[i + 1] - ys[i]) * (xs[i] - xa);
        if (cmp(lhs, rhs) != 0) {
            f.xs.push_back(xs[i]);
            f.ys.push_back(ys[i]);
        }
    }
    f.xs.push_back(xs.back());
    f.ys.push_back(ys.back());
    return f;
}

StepFunction PLFunction::derivative() const {
    StepFunction s;
    s.knots = xs;
    s.values.reserve(xs.size() - 1);
    for (size_t i = 0; i + 1 < xs.size(); ++i)
        s.values.push_back((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]));
    return s;
}

PLFunction PLFunction::combine(const Rational& ca, const PLFunction& f,
                               const Rational& cb, const PLFunction& g) {
    if (cmp(f.x_lo(), g.x_lo()) != 0 || cmp(f.x_hi(), g.x_hi()) != 0)
        throw ValidationError("combine: domains differ");
    std::vector<Rational> ks = sorted_unique([&] {
        std::vector<Rational> v = f.xs;
        v.insert(v.end(), g.xs.begin(), g.xs.end());
        return v;
    }());
    PLFunction h;
    h.xs = ks;
    h.ys.reserve(ks.size());
    for (const auto& x : ks) h.ys.push_back(ca * f(x) + cb * g(x));
    return h;
}

PLFunction PLFunction::compose(const PLFunction& f, const PLFunction& g) {
    if (cmp(g.min_value(), f.x_lo()) < 0 || cmp(g.max_value(), f.x_hi()) > 0)
        throw ValidationError("compose: inner range exceeds outer domain");
    // Knots of f(g(x)): g's own knots plus, per segment of g, the preimages of
    // every f-knot crossed by that segment.
    std::vector<Rational> ks = g.xs;
    for (size_t i = 0; i + 1 < g.xs.size(); ++i) {
        const Rational& u0 = g.ys[i];
        const Rational& u1 = g.ys[i + 1];
        if (cmp(u0, u1) == 0) continue;
        const Rational& lo = cmp(u0, u1) < 0 ? u0 : u1;
        const Rational& hi = cmp(u0, u1) < 0 ? u1 : u0;
        for (const auto& v : f.xs) {
            if (cmp(v, lo) <= 0 || cmp(v, hi) >= 0) continue;
            ks.push_back(g.xs[i] + (v - u0) * (g.xs[i + 1] - g.xs[i]) / (u1 - u0));
        }
    }
    ks = sorted_unique(std::move(ks));
    PLFunction h;
    h.xs = ks;
    h.ys.reserve(ks.size());
    for (const auto& x : ks) h.ys.push_back(f(g(x)));
    return h;
}

Rational PLFunction::sup_abs_difference(const PLFunction& f, const PLFunction& g) {
    PLFunction d = combine(1, f, -1, g);
    Rational m = 0;
    for (const auto& y : d.ys) {
        Rational a = ::abs(y);
        if (cmp(a, m) > 0) m = a;
    }
    return m;
}

StepFunction::StepFunction(std::vector<Rational> knots_, std::vector<Rational> values_)
    : knots(std::move(knots_)), values(std::move(values_)) {
    check_strictly_increasing(knots, "step function");
    if (values.size() + 1 != knots.size())
        throw ValidationError("step function: cell/value count mismatch");
}

StepFunction StepFunction::constant(const Rational& a, const Rational& b, const Rational& v) {
    return StepFunction({a, b}, {v});
}

size_t StepFunction::cell_index(const Rational& x) const {
    size_t i = segment_index(knots, x);
    return i;
}

Rational StepFunction::operator()(const Rational& x) const {
    return values[cell_index(x)];
}

double StepFunction::eval_double(double x) const {
    double lo = knots.front().get_d(), hi = knots.back().get_d();
    if (x <= lo) return values.front().get_d();
    if (x >= hi) return values.back().get_d();
    size_t a = 0, b = knots.size() - 1;
    while (b - a > 1) {
        size_t m = (a + b) / 2;
        if (knots[m].get_d() <= x) a = m; else b = m;
    }
    return values[a].get_d();
}

Rational StepFunction::integral() const {
    Rational s = 0;
    for (size_t i = 0; i < values.size(); ++i)
        s += values[i] * (knots[i + 1] - knots[i]);
    return s;
}

PLFunction StepFunction::antiderivative() const {
    PLFunction f;
    f.xs = knots;
    f.ys.reserve(knots.size());
    Rational acc = 0;
    f.ys.push_back(acc);
    for (size_t i = 0; i < values.size(); ++i) {
        acc += values[i] * (knots[i + 1] - knots[i]);
        f.ys.push_back(acc);
    }
    return f;
}

StepFunction StepFunction::refined_to(const std::vector<Rational>& finer) const {
    if (cmp(finer.front(), knots.front()) != 0 || cmp(finer.back(), knots.back()) != 0)
        throw ValidationError("refined_to: domain mismatch");
    StepFunction s;
    s.knots = finer;
    s.values.reserve(finer.size() - 1);
    for (size_t i = 0; i + 1 < finer.size(); ++i) {
        // Value on [finer[i], finer[i+1]) is the value of the containing cell.
        size_t j = segment_index(knots, finer[i]);
        if (cmp(finer[i], knots[j + 1]) == 0) ++j;
        s.values.push_back(values[j]);
    }
    return s;
}

StepFunction StepFunction::merged() const {
    StepFunction s;
    s.knots.push_back(knots.front());
    for (size_t i = 0; i < values.size(); ++i) {
        if (!s.values.empty() && cmp(s.values.back(), values[i]) == 0) {
            s.knots.back() = knots[i + 1];
        } else {
            s.values.push_back(values[i]);
            s.knots.push_back(knots[i + 1]);
        }
    }
    return s;
}

StepFunction StepFunction::scaled(const Rational& c) const {
    StepFunction s = *this;
    for (auto& v : s.values) v *= c;
    return s;
}

std::vector<Rational> StepFunction::merge_knots(const std::vector<Rational>& a,
                                                const std::vector<Rational>& b) {
    std::vector<Rational> v = a;
    v.insert(v.end(), b.begin(), b.end());
    return sorted_unique(std::move(v));
}

namespace {

StepFunction pointwise(const StepFunction& f, const StepFunction& g,
                       Rational (*op)(const Rational&, const Rational&)) {
    if (cmp(f.x_lo(), g.x_lo()) != 0 || cmp(f.x_hi(), g.x_hi()) != 0)
        throw ValidationError("step combine: domains differ");
    auto ks = StepFunction::merge_knots(f.knots, g.knots);
    StepFunction a = f.refined_to(ks), b = g.refined_to(ks);
    for (size_t i = 0; i < a.values.size(); ++i) a.values[i] = op(a.values[i], b.values[i]);
    return a;
}

}  // namespace

StepFunction StepFunction::add(const StepFunction& f, const StepFunction& g) {
    return pointwise(f, g, +[](const Rational& x, const Rational& y) { return Rational(x + y); });
}

StepFunction StepFunction::subtract(const StepFunction& f, const StepFunction& g) {
    return pointwise(f, g, +[](const Rational& x, const Rational& y) { return Rational(x - y); });
}

StepFunction StepFunction::multiply(const StepFunction& f, const StepFunction& g) {
    return pointwise(f, g, +[](const Rational& x, const Rational& y) { return Rational(x * y); });
}

Rational StepFunction::sup_abs(const StepFunction& f) {
    Rational m = 0;
    for (const auto& v : f.values) {
        Rational a = ::abs(v);
        if (cmp(a, m) > 0) m = a;
    }
    return m;
}

}  // namespace acim
