#include "acim/measures.hpp"

#include <algorithm>
#include <cmath>

#include "acim/errors.hpp"

namespace acim {

namespace {
constexpr double kSnapTol = 1e-12;
}

PiecewiseConstantDensity::PiecewiseConstantDensity(StepFunction step) : step_(std::move(step)) {
    if (step_.knots.empty()) throw ValidationError("density: empty step function");
    if (step_.x_lo() != 0 || step_.x_hi() != 1)
        throw ValidationError("density must live on [0,1]");
    for (const auto& v : step_.values)
        if (sgn(v) < 0) throw ValidationError("density values must be nonnegative");
    Rational mass = step_.integral();
    if (mass != 1) {
        if (std::abs(mass.get_d() - 1.0) > kSnapTol)
            throw ValidationError("density mass " + mass.get_str() + " is not 1");
        step_ = step_.scaled(1 / mass);
    }
}

PiecewiseConstantDensity PiecewiseConstantDensity::uniform() {
    return PiecewiseConstantDensity(StepFunction::constant(0, 1, 1));
}

PiecewiseConstantDensity PiecewiseConstantDensity::from_values(std::vector<Rational> knots,
                                                               std::vector<Rational> values) {
    return PiecewiseConstantDensity(StepFunction(std::move(knots), std::move(values)));
}

Rational l1_distance(const StepFunction& a, const StepFunction& b) {
    auto ks = StepFunction::merge_knots(a.knots, b.knots);
    StepFunction fa = a.refined_to(ks), fb = b.refined_to(ks);
    Rational sum = 0;
    for (size_t i = 0; i < fa.values.size(); ++i)
        sum += ::abs(fa.values[i] - fb.values[i]) * (ks[i + 1] - ks[i]);
    return sum;
}

// ---- DistributionFunction ----

DistributionFunction DistributionFunction::identity() {
    return from_pl(PLFunction::identity());
}

DistributionFunction DistributionFunction::from_pl(PLFunction f) {
    if (f.x_lo() != 0 || f.x_hi() != 1)
        throw ValidationError("distribution function must live on [0,1]");
    if (f.ys.front() != 0 || f.ys.back() != 1)
        throw ValidationError("distribution function must run from 0 to 1");
    if (!f.nondecreasing())
        throw ValidationError("distribution function must be nondecreasing");
    DistributionFunction F;
    F.v_ = std::move(f);
    return F;
}

DistributionFunction DistributionFunction::piecewise(std::vector<CdfSegment> segments) {
    if (segments.empty()) throw ValidationError("distribution function needs segments");
    auto near = [](const Real& a, const Real& b) {
        if (a.exact() && b.exact()) return a == b;
        return std::abs(a.value() - b.value()) <= kSnapTol;
    };
    if (!near(segments.front().domain.lo, Real(0)) || !near(segments.back().domain.hi, Real(1)))
        throw ValidationError("distribution function must live on [0,1]");
    Real prev_hi(0), prev_val(0);
    for (size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        if (i > 0 && !near(s.domain.lo, prev_hi))
            throw ValidationError("distribution segments must tile [0,1]");
        Real v0 = s.form.eval(s.domain.lo);
        Real v1 = s.form.eval(s.domain.hi);
        if (compare(v0, v1) >= 0)
            throw ValidationError("distribution segments must be strictly increasing");
        if (!near(v0, prev_val))
            throw ValidationError("distribution function must be continuous across segments");
        prev_hi = s.domain.hi;
        prev_val = v1;
    }
    if (!near(prev_val, Real(1)))
        throw ValidationError("distribution function must reach 1 at x=1");
    DistributionFunction F;
    F.v_ = std::move(segments);
    return F;
}

DistributionFunction DistributionFunction::tabulated(std::vector<double> xs, std::vector<double> Fs) {
    if (xs.size() != Fs.size() || xs.size() < 2)
        throw ValidationError("tabulated distribution needs matching grids of size >= 2");
    for (size_t i = 0; i + 1 < xs.size(); ++i)
        if (!(xs[i] < xs[i + 1]))
            throw ValidationError("tabulated grid must be strictly increasing");
    if (std::abs(xs.front()) > kSnapTol || std::abs(xs.back() - 1) > kSnapTol)
        throw ValidationError("tabulated grid must span [0,1]");
    xs.front() = 0;
    xs.back() = 1;
    if (std::abs(Fs.front()) > kSnapTol || std::abs(Fs.back() - 1) > kSnapTol)
        throw ValidationError("tabulated distribution must run from 0 to 1");
    Fs.front() = 0;
    Fs.back() = 1;
    for (size_t i = 0; i + 1 < Fs.size(); ++i)
        if (Fs[i] > Fs[i + 1] + 1e-15)
            throw ValidationError("tabulated distribution must be nondecreasing");
    DistributionFunction F;
    F.v_ = Tab{std::move(xs), std::move(Fs)};
    return F;
}

DistributionFunction DistributionFunction::mix(DistributionFunction F1, DistributionFunction F2,
                                               const Real& lambda) {
    if (compare(lambda, Real(0)) <= 0 || compare(lambda, Real(1)) >= 0)
        throw ValidationError("mix weight must lie strictly between 0 and 1");
    DistributionFunction F;
    F.v_ = Mix{std::make_shared<DistributionFunction>(std::move(F1)),
               std::make_shared<DistributionFunction>(std::move(F2)), lambda};
    return F;
}

const Real& DistributionFunction::mix_lambda() const { return std::get<Mix>(v_).lambda; }
const DistributionFunction& DistributionFunction::mix_first() const { return *std::get<Mix>(v_).first; }
const DistributionFunction& DistributionFunction::mix_second() const { return *std::get<Mix>(v_).second; }
const std::vector<CdfSegment>* DistributionFunction::segments() const {
    return std::get_if<std::vector<CdfSegment>>(&v_);
}
const PLFunction* DistributionFunction::pl() const { return std::get_if<PLFunction>(&v_); }
const DistributionFunction::Tab* DistributionFunction::tab() const { return std::get_if<Tab>(&v_); }

double DistributionFunction::eval(double x) const {
    if (auto* f = pl()) return f->eval_double(x);
    if (auto* segs = segments()) {
        if (x <= segs->front().domain.lo.value()) return 0.0;
        if (x >= segs->back().domain.hi.value()) return 1.0;
        for (const auto& s : *segs)
            if (x <= s.domain.hi.value()) return s.form.eval(x);
        return 1.0;
    }
    if (auto* t = tab()) {
        if (x <= 0) return 0;
        if (x >= 1) return 1;
        size_t i = std::upper_bound(t->xs.begin(), t->xs.end(), x) - t->xs.begin();
        if (i == 0) return t->Fs.front();
        if (i >= t->xs.size()) return t->Fs.back();
        double x0 = t->xs[i - 1], x1 = t->xs[i];
        return t->Fs[i - 1] + (t->Fs[i] - t->Fs[i - 1]) * (x - x0) / (x1 - x0);
    }
    auto& m = std::get<Mix>(v_);
    double l = m.lambda.value();
    return l * m.first->eval(x) + (1 - l) * m.second->eval(x);
}

Real DistributionFunction::eval(const Real& x) const {
    if (auto* f = pl()) {
        if (x.exact()) return Real((*f)(x.rational()));
        return Real::approx(f->eval_double(x.value()));
    }
    if (auto* segs = segments()) {
        if (compare(x, segs->front().domain.lo) <= 0) return Real(0);
        if (compare(x, segs->back().domain.hi) >= 0) return Real(1);
        for (const auto& s : *segs)
            if (compare(x, s.domain.hi) <= 0) return s.form.eval(x);
        return Real(1);
    }
    if (tab()) return Real::approx(eval(x.value()));
    auto& m = std::get<Mix>(v_);
    return m.lambda * m.first->eval(x) + (Real(1) - m.lambda) * m.second->eval(x);
}

bool DistributionFunction::strictly_increasing() const {
    if (auto* f = pl()) return f->strictly_increasing();
    if (segments()) return true;  // validated segment-wise at construction
    if (auto* t = tab()) {
        for (size_t i = 0; i + 1 < t->Fs.size(); ++i)
            if (!(t->Fs[i] < t->Fs[i + 1])) return false;
        return true;
    }
    auto& m = std::get<Mix>(v_);
    // Both parts are nondecreasing, so one strict part makes the mix strict.
    return m.first->strictly_increasing() || m.second->strictly_increasing();
}

std::optional<PLFunction> DistributionFunction::as_pl() const {
    if (auto* f = pl()) return *f;
    if (auto* segs = segments()) {
        std::vector<Rational> xs, ys;
        for (const auto& s : *segs) {
            auto* a = s.form.as_affine();
            if (!a || !s.form.exact() || !s.domain.lo.exact() || !s.domain.hi.exact())
                return std::nullopt;
            if (xs.empty()) {
                xs.push_back(s.domain.lo.rational());
                ys.push_back(s.form.eval(s.domain.lo).rational());
            }
            xs.push_back(s.domain.hi.rational());
            ys.push_back(s.form.eval(s.domain.hi).rational());
        }
        return PLFunction(std::move(xs), std::move(ys));
    }
    if (tab()) return std::nullopt;
    auto& m = std::get<Mix>(v_);
    if (!m.lambda.exact()) return std::nullopt;
    auto a = m.first->as_pl();
    auto b = m.second->as_pl();
    if (!a || !b) return std::nullopt;
    return PLFunction::combine(m.lambda.rational(), *a,
                               Rational(1) - m.lambda.rational(), *b);
}

namespace {

// Pointwise piecewise-linear inversion: fails only when u hits a flat part.
Rational invert_pl_cdf(const PLFunction& f, const Rational& u) {
    if (u < f.ys.front() || u > f.ys.back())
        throw ValidationError("invert_cdf: u outside [0,1]");
    Rational x_left, x_right;
    bool found = false;
    for (size_t i = 0; i + 1 < f.xs.size(); ++i) {
        const Rational& y0 = f.ys[i];
        const Rational& y1 = f.ys[i + 1];
        if (u < std::min(y0, y1) || u > std::max(y0, y1)) continue;
        Rational lo, hi;
        if (y0 == y1) {
            lo = f.xs[i];
            hi = f.xs[i + 1];
        } else {
            Rational x = f.xs[i] + (u - y0) * (f.xs[i + 1] - f.xs[i]) / (y1 - y0);
            lo = hi = x;
        }
        if (!found) {
            x_left = lo;
            x_right = hi;
            found = true;
        } else {
            x_left = std::min(x_left, lo);
            x_right = std::max(x_right, hi);
        }
    }
    if (!found) throw StructureError("invert_cdf: no preimage found");
    if (x_left != x_right)
        throw NonInvertibleCdf("invert_cdf: value " + u.get_str() +
                               " is taken on a flat segment [" + x_left.get_str() + ", " +
                               x_right.get_str() + "]");
    return x_left;
}

}  // namespace

Real DistributionFunction::invert(const Real& u) const {
    if (u < Real(0) || u > Real(1)) {
        // Composed evaluations feed back values a few ulps outside [0,1];
        // absorb those and reject anything larger.
        double d = u.value();
        if (u.exact() || d < -1e-12 || d > 1.0 + 1e-12)
            throw ValidationError("invert_cdf: u outside [0,1]");
        return invert(Real::approx(std::clamp(d, 0.0, 1.0)));
    }
    if (auto* f = pl()) {
        if (u.exact()) return Real(invert_pl_cdf(*f, u.rational()));
        return Real(invert_pl_cdf(*f, Rational(u.value())));
    }
    if (auto* segs = segments()) {
        for (const auto& s : *segs) {
            Real v1 = s.form.eval(s.domain.hi);
            if (compare(u, v1) <= 0) return s.form.invert(u, s.domain.lo, s.domain.hi);
        }
        return segs->back().domain.hi;
    }
    if (auto* t = tab()) {
        double ud = u.value();
        size_t i = std::upper_bound(t->Fs.begin(), t->Fs.end(), ud) - t->Fs.begin();
        if (i == 0) return Real::approx(t->xs.front());
        if (i >= t->Fs.size()) {
            if (ud > t->Fs.back()) return Real::approx(1.0);
            i = t->Fs.size() - 1;
        }
        double F0 = t->Fs[i - 1], F1 = t->Fs[i];
        if (F1 <= F0) {
            if (ud == F0) throw NonInvertibleCdf("invert_cdf: flat tabulated segment");
            return Real::approx(t->xs[i]);
        }
        return Real::approx(t->xs[i - 1] + (t->xs[i] - t->xs[i - 1]) * (ud - F0) / (F1 - F0));
    }
    if (auto flat = as_pl()) {
        if (u.exact()) return Real(invert_pl_cdf(*flat, u.rational()));
        return Real(invert_pl_cdf(*flat, Rational(u.value())));
    }
    if (!strictly_increasing())
        throw NonInvertibleCdf("invert_cdf: distribution function has flat parts");
    // Monotone bisection for mixes.
    double ud = u.value();
    double lo = 0, hi = 1;
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        double mid = (lo + hi) / 2;
        if (eval(mid) < ud) lo = mid; else hi = mid;
    }
    return Real::approx((lo + hi) / 2);
}

double DistributionFunction::invert(double u) const { return invert(Real::approx(u)).value(); }

Homeomorphism DistributionFunction::as_homeomorphism() const {
    if (!strictly_increasing())
        throw NonInvertibleCdf("distribution function with flat parts is not a homeomorphism");
    if (auto f = as_pl()) return Homeomorphism::from_pl(*f);
    Homeomorphism h;
    DistributionFunction self = *this;
    h.forward = [self](double x) { return self.eval(x); };
    h.inverse = [self](double y) { return self.invert(y); };
    h.tolerance = tab() || is_mix() ? 1e-12 : 1e-14;
    h.exact_pl = std::nullopt;
    return h;
}

DistributionFunction cdf_from_density(const PiecewiseConstantDensity& f) {
    return DistributionFunction::from_pl(f.step().antiderivative());
}

Real invert_cdf(const DistributionFunction& F, const Real& u) { return F.invert(u); }

DistributionFunction convex_combination(const DistributionFunction& F1,
                                        const DistributionFunction& F2, const Real& lambda) {
    return DistributionFunction::mix(F1, F2, lambda);
}

// ---- Markov machinery ----

MarkovStructure markov_structure(const PiecewiseMonotoneMap& map, size_t max_cells) {
    if (!map.all_affine() || !map.exact())
        throw ValidationError("Markov analysis requires exact affine branches");
    std::vector<Rational> pts;
    for (const auto& r : map.breakpoints()) pts.push_back(r.rational());
    pts = sorted_unique(std::move(pts));

    // Close the point set under images: every partition point's image (under
    // each branch touching it) must itself be a partition point. At a map
    // breakpoint both one-sided branch values count, since the map may jump.
    for (;;) {
        std::vector<Rational> added;
        auto note = [&](const Real& v) {
            if (!std::binary_search(pts.begin(), pts.end(), v.rational()))
                added.push_back(v.rational());
        };
        for (const auto& p : pts) {
            size_t own = map.branch_index(Real(p));
            note(map.branches()[own].eval(Real(p)));
            // An interior map breakpoint is shared with the next branch,
            // whose one-sided value differs when the map jumps there.
            if (own + 1 < map.branch_count() && map.branches()[own].domain.hi == Real(p))
                note(map.branches()[own + 1].eval(Real(p)));
        }
        if (added.empty()) break;
        pts.insert(pts.end(), added.begin(), added.end());
        pts = sorted_unique(std::move(pts));
        if (pts.size() > max_cells + 1)
            throw StructureError("partition does not close under images (not Markov within " +
                                 std::to_string(max_cells) + " cells)");
    }

    MarkovStructure ms;
    ms.partition = pts;
    ms.incidence.reserve(pts.size() - 1);
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        Rational mid = (pts[i] + pts[i + 1]) / 2;
        const Branch& b = map.branches()[map.branch_index(Real(mid))];
        Rational v0 = b.eval(Real(pts[i])).rational();
        Rational v1 = b.eval(Real(pts[i + 1])).rational();
        if (v0 > v1) std::swap(v0, v1);
        auto it0 = std::lower_bound(pts.begin(), pts.end(), v0);
        auto it1 = std::lower_bound(pts.begin(), pts.end(), v1);
        if (it0 == pts.end() || *it0 != v0 || it1 == pts.end() || *it1 != v1)
            throw StructureError("branch image endpoint is not a partition point");
        size_t j0 = it0 - pts.begin();
        size_t j1 = it1 - pts.begin();
        if (j1 <= j0) throw StructureError("branch image collapses on a cell");
        ms.incidence.emplace_back(j0, j1 - 1);
    }
    return ms;
}

namespace {

// Basis of the null space of a square rational matrix, via Gauss-Jordan.
std::vector<std::vector<Rational>> null_space(std::vector<std::vector<Rational>> A) {
    size_t n = A.size();
    std::vector<size_t> pivot_col;
    size_t row = 0;
    for (size_t col = 0; col < n && row < n; ++col) {
        size_t piv = row;
        while (piv < n && sgn(A[piv][col]) == 0) ++piv;
        if (piv == n) continue;
        std::swap(A[piv], A[row]);
        Rational d = A[row][col];
        for (size_t j = 0; j < n; ++j) A[row][j] /= d;
        for (size_t i = 0; i < n; ++i) {
            if (i == row || sgn(A[i][col]) == 0) continue;
            Rational factor = A[i][col];
            for (size_t j = 0; j < n; ++j) A[i][j] -= factor * A[row][j];
        }
        pivot_col.push_back(col);
        ++row;
    }
    std::vector<bool> is_pivot(n, false);
    for (size_t c : pivot_col) is_pivot[c] = true;
    std::vector<std::vector<Rational>> basis;
    for (size_t free_col = 0; free_col < n; ++free_col) {
        if (is_pivot[free_col]) continue;
        std::vector<Rational> v(n, Rational(0));
        v[free_col] = 1;
        for (size_t r = 0; r < pivot_col.size(); ++r)
            v[pivot_col[r]] = -A[r][free_col];
        basis.push_back(std::move(v));
    }
    return basis;
}

}  // namespace

PiecewiseConstantDensity markov_invariant_density(const PiecewiseMonotoneMap& map,
                                                  const MarkovStructure& ms) {
    size_t n = ms.cells();
    if (ms.incidence.size() != n) throw ValidationError("markov structure incidence size mismatch");
    // Transfer of a cell-wise constant density: f'_j = sum_i f_i / |slope_i|
    // over cells i whose image covers cell j. Solve f' = f.
    std::vector<std::vector<Rational>> A(n, std::vector<Rational>(n, Rational(0)));
    for (size_t i = 0; i < n; ++i) {
        Rational mid = (ms.partition[i] + ms.partition[i + 1]) / 2;
        const Branch& b = map.branches()[map.branch_index(Real(mid))];
        const AffineForm* af = b.form.as_affine();
        if (!af) throw ValidationError("markov_invariant_density requires affine branches");
        Rational w = 1 / ::abs(af->slope.rational());
        for (size_t j = ms.incidence[i].first; j <= ms.incidence[i].second; ++j)
            A[j][i] += w;  // transposed transfer matrix acting on the density vector
    }
    for (size_t i = 0; i < n; ++i) A[i][i] -= 1;
    auto basis = null_space(std::move(A));
    if (basis.empty())
        throw StructureError("transfer matrix has no fixed density (unexpected for a Markov map)");

    auto to_step = [&](const std::vector<Rational>& v) {
        return StepFunction(ms.partition, v);
    };
    auto mass_of = [&](const std::vector<Rational>& v) {
        Rational m = 0;
        for (size_t i = 0; i < n; ++i) m += v[i] * (ms.partition[i + 1] - ms.partition[i]);
        return m;
    };

    if (basis.size() > 1) {
        std::vector<StepFunction> steps;
        for (auto& v : basis) {
            Rational m = mass_of(v);
            if (sgn(m) != 0)
                for (auto& x : v) x /= m;
            steps.push_back(to_step(v));
        }
        throw AmbiguousInvariantDensity(
            "invariant density is not unique: eigenspace dimension " + std::to_string(basis.size()),
            std::move(steps));
    }

    std::vector<Rational> v = basis.front();
    Rational m = mass_of(v);
    if (sgn(m) == 0) throw StructureError("stationary vector has zero mass");
    for (auto& x : v) x /= m;
    for (const auto& x : v)
        if (sgn(x) < 0) throw StructureError("stationary vector changes sign");
    return PiecewiseConstantDensity(to_step(v));
}

PiecewiseConstantDensity markov_invariant_density(const PiecewiseMonotoneMap& map) {
    return markov_invariant_density(map, markov_structure(map));
}

PiecewiseConstantDensity ulam_approximation(const PiecewiseMonotoneMap& map, size_t n_bins,
                                            double residual, size_t max_iter) {
    if (n_bins < 2) throw ValidationError("ulam_approximation needs at least 2 bins");
    struct Entry {
        size_t from, to;
        double weight;  // |B_from ∩ map^{-1} B_to| / |B_from|
    };
    std::vector<Entry> entries;
    double h = 1.0 / static_cast<double>(n_bins);
    for (const auto& b : map.branches()) {
        Interval img = b.image();
        double ilo = img.lo.value(), ihi = img.hi.value();
        size_t j0 = static_cast<size_t>(std::max(0.0, std::floor(ilo * n_bins)));
        size_t j1 = static_cast<size_t>(std::min<double>(n_bins - 1, std::floor(ihi * n_bins)));
        for (size_t j = j0; j <= j1 && j < n_bins; ++j) {
            double ylo = std::max(ilo, j * h);
            double yhi = std::min(ihi, (j + 1) * h);
            if (yhi <= ylo) continue;
            // Pull the bin slice back through the branch.
            double u = branch_inverse(b, Real::approx(ylo)).value();
            double v = branch_inverse(b, Real::approx(yhi)).value();
            if (u > v) std::swap(u, v);
            size_t i0 = static_cast<size_t>(std::max(0.0, std::floor(u * n_bins)));
            size_t i1 = static_cast<size_t>(std::min<double>(n_bins - 1, std::floor(v * n_bins)));
            for (size_t i = i0; i <= i1 && i < n_bins; ++i) {
                double xlo = std::max(u, i * h);
                double xhi = std::min(v, (i + 1) * h);
                if (xhi > xlo) entries.push_back({i, j, (xhi - xlo) / h});
            }
        }
    }
    std::vector<double> mu(n_bins, 1.0 / n_bins), next(n_bins);
    for (size_t it = 0; it < max_iter; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (const auto& e : entries) next[e.to] += mu[e.from] * e.weight;
        double mass = 0;
        for (double x : next) mass += x;
        if (mass <= 0) throw ConvergenceError("ulam iteration lost all mass");
        for (double& x : next) x /= mass;
        double diff = 0;
        for (size_t i = 0; i < n_bins; ++i) diff += std::abs(next[i] - mu[i]);
        mu.swap(next);
        if (diff < residual) {
            std::vector<Rational> knots, values;
            knots.reserve(n_bins + 1);
            for (size_t i = 0; i <= n_bins; ++i)
                knots.push_back(rat(static_cast<long>(i), static_cast<long>(n_bins)));
            values.reserve(n_bins);
            for (size_t i = 0; i < n_bins; ++i)
                values.push_back(Rational(mu[i]) * static_cast<long>(n_bins));
            return PiecewiseConstantDensity(StepFunction(std::move(knots), std::move(values)));
        }
    }
    throw ConvergenceError("ulam power iteration did not reach residual " +
                           std::to_string(residual));
}

double ks_distance(const DistributionFunction& F, std::vector<double> samples) {
    if (samples.empty()) throw ValidationError("ks_distance needs samples");
    for (double s : samples)
        if (s < 0 || s > 1) throw ValidationError("ks_distance: sample outside [0,1]");
    std::sort(samples.begin(), samples.end());
    double n = static_cast<double>(samples.size());
    double d = 0;
    for (size_t i = 0; i < samples.size(); ++i) {
        double Fx = F.eval(samples[i]);
        d = std::max(d, std::abs(Fx - static_cast<double>(i) / n));
        d = std::max(d, std::abs(Fx - static_cast<double>(i + 1) / n));
    }
    return d;
}

}  // namespace acim
