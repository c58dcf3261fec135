#include "invar3/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <string>

namespace invar3 {

unsigned worker_count()
{
    if (const char* env = std::getenv("INVAR3_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1)
            return static_cast<unsigned>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

std::string to_string(FieldMode m) { return m == FieldMode::Scalar ? "scalar" : "bundle"; }

std::string to_string(Answer a)
{
    switch (a) {
    case Answer::Yes:
        return "yes";
    case Answer::No:
        return "no";
    default:
        return "inconclusive";
    }
}

void DomainGrid::validate(int min_resolution) const
{
    if (rects.empty())
        throw GridError("grid has no rectangles");
    if (nx < min_resolution || ny < min_resolution)
        throw GridError("grid resolution must be at least " + std::to_string(min_resolution) + " x " +
                        std::to_string(min_resolution));
    for (const Rect& r : rects)
        if (!(r.x1 > r.x0) || !(r.y1 > r.y0) || !std::isfinite(r.x0 + r.x1 + r.y0 + r.y1))
            throw GridError("degenerate rectangle");
}

std::vector<Point> DomainGrid::samples() const
{
    validate(2);
    std::vector<Point> out;
    out.reserve(size());
    for (const Rect& r : rects)
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j)
                out.push_back({r.x0 + (r.x1 - r.x0) * i / (nx - 1), r.y0 + (r.y1 - r.y0) * j / (ny - 1)});
    return out;
}

bool DomainGrid::contains(Point p, double slack) const
{
    for (const Rect& r : rects)
        if (p.x >= r.x0 - slack && p.x <= r.x1 + slack && p.y >= r.y0 - slack && p.y <= r.y1 + slack)
            return true;
    return false;
}

std::vector<std::string> field_names(FieldMode mode)
{
    if (mode == FieldMode::Scalar) {
        std::vector<std::string> n;
        for (int d = 0; d <= 3; ++d)
            for (int j = 0; j <= d; ++j)
                n.push_back("J" + std::to_string(d - j) + std::to_string(j));
        return n;
    }
    return {"sigma3_111", "sigma3_112", "sigma3_122", "sigma3_222", "sigma2_11", "sigma2_12",
            "sigma2_22",  "sigma1_1",   "sigma1_2",   "sigma0",     "K"};
}

PointFields point_fields(const Operator3<Jet2>& a, FieldMode mode, std::array<int, 2> pair, const RegularityConfig& cfg)
{
    const auto inv = basic_invariants(a.principal(), cfg);
    const Jet2& ia = inv[static_cast<std::size_t>(pair[0] - 1)];
    const Jet2& ib = inv[static_cast<std::size_t>(pair[1] - 1)];
    PointFields out;
    for (std::size_t k = 0; k < 4; ++k)
        out.I[k] = inv[k].value();
    out.u = {ia.value(), ib.value()};
    out.jac = {{{ia.c(1, 0), ia.c(0, 1)}, {ib.c(1, 0), ib.c(0, 1)}}};
    if (mode == FieldMode::Scalar) {
        for (int d = 0; d <= 3; ++d)
            for (int j = 0; j <= d; ++j)
                out.fields.push_back(box3(a, ipow(ia, d - j) * ipow(ib, j)));
        return out;
    }
    const LineBundleConnection lb = line_bundle_connection(a);
    const TotalSymbol t = split(a, ConnectionChoice::Chern, lb.theta).sigma;
    const auto& L = out.jac;
    const Symbol3<double> s3 = push_symbol(values(t.s3), L);
    const Sym2Form<double> s2 =
        push_contravariant(Sym2Form<double>{t.s2[0].value(), 2.0 * t.s2[1].value(), t.s2[2].value()}, L);
    const double det = L[0][0] * L[1][1] - L[0][1] * L[1][0];
    for (int n = 0; n < 4; ++n)
        out.fields.push_back(s3.comp(n));
    out.fields.push_back(s2.g11);
    out.fields.push_back(0.5 * s2.g12);
    out.fields.push_back(s2.g22);
    for (int i = 0; i < 2; ++i)
        out.fields.push_back(L[i][0] * t.s1[0].value() + L[i][1] * t.s1[1].value());
    out.fields.push_back(t.s0.value());
    out.fields.push_back(exterior_derivative(lb.theta).r.value() / det);
    out.theta = lb.theta;
    return out;
}

std::vector<ModelSample> sample_operator(const OperatorField& a, const DomainGrid& grid, FieldMode,
                                         const RegularityConfig& cfg)
{
    grid.validate();
    const std::vector<Point> pts = grid.samples();
    return parallel_map<ModelSample>(pts.size(), [&](std::size_t n) {
        ModelSample s;
        s.x = pts[n];
        try {
            s.jets = a(s.x, 4);
            const auto inv = basic_invariants(s.jets.principal(), cfg);
            s.Ijets = inv;
            for (std::size_t k = 0; k < 4; ++k) {
                s.I[k] = inv[k].value();
                s.dI[k] = {inv[k].c(1, 0), inv[k].c(0, 1)};
            }
            s.regular = std::isfinite(s.I[0] + s.I[1] + s.I[2] + s.I[3]);
            if (!s.regular)
                s.reason = "non-finite";
        } catch (const RegularityError& e) {
            s.reason = e.condition;
        } catch (const SingularSymbol&) {
            s.reason = "singular-symbol";
        } catch (const NormalizationError&) {
            s.reason = "normalization";
        } catch (const DomainError&) {
            s.reason = "domain";
        } catch (const NotInvertible&) {
            s.reason = "not-invertible";
        } catch (const ZeroCrossing&) {
            s.reason = "zero-crossing";
        }
        return s;
    });
}

namespace {

double pair_det(const ModelSample& s, std::array<int, 2> pair)
{
    const auto& ga = s.dI[static_cast<std::size_t>(pair[0] - 1)];
    const auto& gb = s.dI[static_cast<std::size_t>(pair[1] - 1)];
    return ga[0] * gb[1] - ga[1] * gb[0];
}

// Jacobian floor against the local field scale: |dIa ^ dIb| >= floor |dIa| |dIb|.
bool independent(const ModelSample& s, std::array<int, 2> pair, double floor)
{
    const auto& ga = s.dI[static_cast<std::size_t>(pair[0] - 1)];
    const auto& gb = s.dI[static_cast<std::size_t>(pair[1] - 1)];
    const double scale = std::hypot(ga[0], ga[1]) * std::hypot(gb[0], gb[1]);
    return s.regular && scale > 0.0 && std::abs(pair_det(s, pair)) >= floor * scale;
}

double usable_fraction(const std::vector<ModelSample>& set, std::array<int, 2> pair, double floor)
{
    std::size_t n = 0;
    for (const ModelSample& s : set)
        if (independent(s, pair, floor))
            ++n;
    return set.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(set.size());
}

struct Bary {
    bool inside = false;
    std::array<double, 3> w{};
};

Bary barycentric(const std::array<double, 2>& p, const std::array<double, 2>& a, const std::array<double, 2>& b,
                 const std::array<double, 2>& c)
{
    const double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    Bary r;
    if (det == 0.0 || !std::isfinite(det))
        return r;
    const double l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    const double l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    const double l0 = 1.0 - l1 - l2;
    const double e = -1e-12;
    r.inside = l0 >= e && l1 >= e && l2 >= e;
    r.w = {l0, l1, l2};
    return r;
}

void triangulate(NaturalModel& m)
{
    const auto nx = static_cast<std::size_t>(m.grid.nx), ny = static_cast<std::size_t>(m.grid.ny);
    for (std::size_t r = 0; r < m.grid.rects.size(); ++r) {
        const std::size_t base = r * nx * ny;
        auto id = [&](std::size_t i, std::size_t j) { return base + i * ny + j; };
        for (std::size_t i = 0; i + 1 < nx; ++i)
            for (std::size_t j = 0; j + 1 < ny; ++j) {
                const std::array<std::array<std::size_t, 3>, 2> tris = {
                    {{id(i, j), id(i + 1, j), id(i + 1, j + 1)}, {id(i, j), id(i + 1, j + 1), id(i, j + 1)}}};
                for (const auto& t : tris) {
                    if (!m.samples[t[0]].usable || !m.samples[t[1]].usable || !m.samples[t[2]].usable)
                        continue;
                    const auto &a = m.samples[t[0]].u, &b = m.samples[t[1]].u, &c = m.samples[t[2]].u;
                    const double area = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                    if (area != 0.0 && std::isfinite(area))
                        m.triangles.push_back(t);
                }
            }
    }
}

void resample(NaturalModel& m, int n)
{
    m.resample = n;
    m.u_min = {INFINITY, INFINITY};
    m.u_max = {-INFINITY, -INFINITY};
    for (const ModelSample& s : m.samples)
        if (s.usable)
            for (int k = 0; k < 2; ++k) {
                m.u_min[k] = std::min(m.u_min[k], s.u[k]);
                m.u_max[k] = std::max(m.u_max[k], s.u[k]);
            }
    const std::size_t nf = m.field_names.size();
    m.resampled.assign(nf, std::vector<double>(static_cast<std::size_t>(n * n), std::numeric_limits<double>::quiet_NaN()));
    if (m.triangles.empty() || n < 2)
        return;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const std::array<double, 2> p = {m.u_min[0] + (m.u_max[0] - m.u_min[0]) * i / (n - 1),
                                             m.u_min[1] + (m.u_max[1] - m.u_min[1]) * j / (n - 1)};
            for (const auto& t : m.triangles) {
                const Bary b = barycentric(p, m.samples[t[0]].u, m.samples[t[1]].u, m.samples[t[2]].u);
                if (!b.inside)
                    continue;
                for (std::size_t f = 0; f < nf; ++f) {
                    double v = 0.0;
                    for (std::size_t k = 0; k < 3; ++k)
                        v += b.w[k] * m.samples[t[k]].fields[f];
                    m.resampled[f][static_cast<std::size_t>(i * n + j)] = v;
                }
                break;
            }
        }
}

NaturalModel finalize(std::vector<ModelSample> samples, const DomainGrid& grid, FieldMode mode,
                      std::array<int, 2> pair, double floor, const EquivalenceConfig& cfg)
{
    NaturalModel m;
    m.mode = mode;
    m.pair = pair;
    m.grid = grid;
    m.field_names = field_names(mode);
    m.jacobian_floor = floor;
    m.samples = std::move(samples);
    auto filled = parallel_map<ModelSample>(m.samples.size(), [&](std::size_t n) {
        ModelSample s = m.samples[n];
        if (!s.regular)
            return s;
        s.jacobian = pair_det(s, pair);
        s.u = {s.I[static_cast<std::size_t>(pair[0] - 1)], s.I[static_cast<std::size_t>(pair[1] - 1)]};
        if (!independent(s, pair, floor)) {
            s.reason = "jacobian-floor";
            return s;
        }
        try {
            const PointFields pf = point_fields(s.jets, mode, pair, cfg.regularity);
            bool finite = true;
            for (double v : pf.fields)
                finite = finite && std::isfinite(v);
            if (!finite) {
                s.reason = "non-finite";
                return s;
            }
            s.fields = pf.fields;
            s.theta = pf.theta;
            s.usable = true;
        } catch (const SingularSymbol&) {
            s.reason = "singular-symbol";
        } catch (const RegularityError& e) {
            s.reason = e.condition;
        }
        return s;
    });
    m.samples = std::move(filled);
    std::size_t used = 0;
    for (const ModelSample& s : m.samples)
        used += s.usable ? 1 : 0;
    m.usable_fraction = m.samples.empty() ? 0.0 : static_cast<double>(used) / static_cast<double>(m.samples.size());
    triangulate(m);
    resample(m, cfg.resample);
    return m;
}

} // namespace

std::optional<std::array<int, 2>> select_pair(const std::vector<const std::vector<ModelSample>*>& sets,
                                              const EquivalenceConfig& cfg)
{
    for (const auto& pair : cfg.pairs) {
        bool ok = true;
        for (const auto* set : sets)
            ok = ok && usable_fraction(*set, pair, cfg.jacobian_floor) >= cfg.min_regular;
        if (ok)
            return pair;
    }
    return std::nullopt;
}

NaturalModel build_natural_model(const OperatorField& a, const DomainGrid& grid, FieldMode mode,
                                 const EquivalenceConfig& cfg, std::optional<std::array<int, 2>> pair)
{
    std::vector<ModelSample> samples = sample_operator(a, grid, mode, cfg.regularity);
    const std::vector<const std::vector<ModelSample>*> sets{&samples};
    if (!pair)
        pair = select_pair(sets, cfg);
    if (!pair)
        throw GeneralPositionError("not in general position: no invariant pair is independent on enough of the grid");
    return finalize(std::move(samples), grid, mode, *pair, cfg.jacobian_floor, cfg);
}

namespace {

struct Solved {
    Point y{};
    std::optional<Operator3<Jet2>> jets; // order-4 jets at y when the last evaluation had them
};

// Solves I_B(y) = u by damped Newton on B's invariant jets.
std::optional<Solved> solve_invariants(const OperatorField& b, const DomainGrid& gb, std::array<int, 2> pair,
                                       const std::array<double, 2>& u, const std::array<double, 2>& uscale, Point y,
                                       const RegularityConfig& cfg)
{
    struct Eval {
        std::array<double, 2> r{};
        std::array<std::array<double, 2>, 2> J{};
        std::optional<Operator3<Jet2>> jets;
    };
    auto residual = [&](Point p, int order) -> std::optional<Eval> {
        try {
            Eval e;
            Operator3<Jet2> jets = b(p, order);
            const auto inv = basic_invariants(jets.principal(), cfg);
            const Jet2& ia = inv[static_cast<std::size_t>(pair[0] - 1)];
            const Jet2& ib = inv[static_cast<std::size_t>(pair[1] - 1)];
            e.J = {{{ia.c(1, 0), ia.c(0, 1)}, {ib.c(1, 0), ib.c(0, 1)}}};
            e.r = {ia.value() - u[0], ib.value() - u[1]};
            if (order >= 4)
                e.jets = std::move(jets);
            return e;
        } catch (const std::runtime_error&) {
            return std::nullopt;
        }
    };
    // residual measured in units of the chart extent
    const double tol = 1e-13;
    auto norm = [&](const std::array<double, 2>& r) { return std::hypot(r[0] / uscale[0], r[1] / uscale[1]); };
    double size = 0.0;
    for (const Rect& r : gb.rects)
        size = std::max({size, r.x1 - r.x0, r.y1 - r.y0});
    auto cur = residual(y, 2);
    if (!cur)
        return std::nullopt;
    double rn = norm(cur->r);
    for (int it = 0; it < 20 && rn > tol; ++it) {
        // Newton converges quadratically near a root; a slow start means another sheet or no preimage
        if (it == 8 && rn > 1e-4)
            return std::nullopt;
        const auto& J = cur->J;
        const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
        if (det == 0.0 || !std::isfinite(det))
            return std::nullopt;
        const double sx = (J[1][1] * cur->r[0] - J[0][1] * cur->r[1]) / det;
        const double sy = (-J[1][0] * cur->r[0] + J[0][0] * cur->r[1]) / det;
        // close to the root the next point is likely final, so fetch the jets the fields need
        const int order = rn < 1e-6 ? 4 : 2;
        double t = 1.0;
        bool moved = false;
        for (int h = 0; h < 8; ++h, t *= 0.5) {
            const Point cand{y.x - t * sx, y.y - t * sy};
            if (!gb.contains(cand, 0.05 * size))
                continue;
            auto next = residual(cand, order);
            if (next && norm(next->r) < rn) {
                y = cand;
                cur = std::move(next);
                rn = norm(cur->r);
                moved = true;
                break;
            }
        }
        if (!moved)
            break;
    }
    if (!(rn <= 1e4 * tol) || !gb.contains(y, 1e-9 * size))
        return std::nullopt;
    return Solved{y, std::move(cur->jets)};
}

// Value and gradient of a Taylor polynomial at offset (h, k).
std::array<double, 3> taylor(const Jet2& f, double h, double k)
{
    std::array<double, 3> out{};
    for (int d = 0; d <= f.order(); ++d)
        for (int j = 0; j <= d; ++j) {
            const int i = d - j;
            const double c = f.c(i, j);
            out[0] += c * std::pow(h, i) * std::pow(k, j);
            if (i > 0)
                out[1] += c * i * std::pow(h, i - 1) * std::pow(k, j);
            if (j > 0)
                out[2] += c * j * std::pow(h, i) * std::pow(k, j - 1);
        }
    return out;
}

// Newton on the sampled invariant jets, re-expanded at the nearest usable sample.
// Costs no evaluation of B; a seed that leaves the usable region is dropped.
std::optional<Point> taylor_seed(const NaturalModel& mb, const std::array<double, 2>& u,
                                 const std::array<double, 2>& uscale, Point y, double cell)
{
    const std::size_t ia = static_cast<std::size_t>(mb.pair[0] - 1), ib = static_cast<std::size_t>(mb.pair[1] - 1);
    double rn = INFINITY;
    for (int it = 0; it < 16; ++it) {
        const ModelSample* near = nullptr;
        double dist = INFINITY;
        for (const ModelSample& s : mb.samples) {
            if (!s.usable)
                continue;
            const double d = std::hypot(s.x.x - y.x, s.x.y - y.y);
            if (d < dist) {
                dist = d;
                near = &s;
            }
        }
        if (!near || dist > 1.5 * cell)
            return std::nullopt;
        const double h = y.x - near->x.x, k = y.y - near->x.y;
        const auto fa = taylor(near->Ijets[ia], h, k), fb = taylor(near->Ijets[ib], h, k);
        const double ra = fa[0] - u[0], rb = fb[0] - u[1];
        rn = std::hypot(ra / uscale[0], rb / uscale[1]);
        const double det = fa[1] * fb[2] - fa[2] * fb[1];
        if (det == 0.0 || !std::isfinite(det))
            return std::nullopt;
        double sx = (fb[2] * ra - fa[2] * rb) / det, sy = (-fb[1] * ra + fa[1] * rb) / det;
        const double len = std::hypot(sx, sy);
        if (len > cell) {
            sx *= cell / len;
            sy *= cell / len;
        }
        y = {y.x - sx, y.y - sy};
        if (len < 1e-10 * cell)
            break;
    }
    if (!(rn < 1e-2))
        return std::nullopt;
    return y;
}

// Pointwise relative difference, floored at 1e-4 of the field's scale near zeros.
double field_discrepancy(double a, double b, double scale)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4 * scale});
}

std::array<double, 2> chart_scale(const NaturalModel& m)
{
    std::array<double, 2> s{};
    for (int k = 0; k < 2; ++k)
        s[k] = std::max({std::abs(m.u_min[k]), std::abs(m.u_max[k]), std::numeric_limits<double>::min()});
    return s;
}

struct Match {
    Point y{};
    PointFields fb;
    double rel = INFINITY; // max relative field discrepancy
};

// Locates u in B's natural chart and returns the best-agreeing preimage.
// A partner must reproduce all four invariants, which rules out other sheets of a folded chart.
std::optional<Match> locate(const NaturalModel& mb, const OperatorField& b, const std::array<double, 4>& I,
                            const std::array<double, 4>& iscale, const std::vector<double>& fields,
                            const std::vector<double>& scales, const EquivalenceConfig& cfg)
{
    const std::array<double, 2> u = {I[static_cast<std::size_t>(mb.pair[0] - 1)], I[static_cast<std::size_t>(mb.pair[1] - 1)]};
    // Seeds: preimages under the linear interpolant first, then the nearest samples in the chart.
    // The invariant map may fold, so several sheets can cover u.
    std::vector<Point> seeds;
    for (const auto& t : mb.triangles) {
        const Bary w = barycentric(u, mb.samples[t[0]].u, mb.samples[t[1]].u, mb.samples[t[2]].u);
        if (!w.inside)
            continue;
        Point seed{0.0, 0.0};
        for (std::size_t k = 0; k < 3; ++k) {
            seed.x += w.w[k] * mb.samples[t[k]].x.x;
            seed.y += w.w[k] * mb.samples[t[k]].x.y;
        }
        seeds.push_back(seed);
    }
    const auto us = chart_scale(mb);
    std::vector<std::pair<double, std::size_t>> near;
    for (std::size_t n = 0; n < mb.samples.size(); ++n)
        if (mb.samples[n].usable)
            near.emplace_back(std::hypot((mb.samples[n].u[0] - u[0]) / us[0], (mb.samples[n].u[1] - u[1]) / us[1]), n);
    const std::size_t k = std::min<std::size_t>(near.size(), static_cast<std::size_t>(cfg.seeds));
    std::partial_sort(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(k), near.end());
    for (std::size_t i = 0; i < k; ++i)
        seeds.push_back(mb.samples[near[i].second].x);

    std::optional<Match> best;
    std::vector<Point> found;
    int attempts = 0;
    double cell = 0.0;
    for (const Rect& r : mb.grid.rects)
        cell = std::max(cell, std::hypot((r.x1 - r.x0) / (mb.grid.nx - 1), (r.y1 - r.y0) / (mb.grid.ny - 1)));
    std::vector<Point> tried;
    for (const Point& seed : seeds) {
        const auto start = taylor_seed(mb, u, us, seed, cell);
        if (!start)
            continue;
        // a start next to a known root would converge to it again
        bool redundant = false;
        for (const Point& f : tried)
            redundant = redundant || std::hypot(start->x - f.x, start->y - f.y) < 0.1 * cell;
        if (redundant)
            continue;
        tried.push_back(*start);
        if (attempts++ >= 2 * cfg.seeds)
            break;
        const auto y = solve_invariants(b, mb.grid, mb.pair, u, us, *start, cfg.regularity);
        if (!y)
            continue;
        bool seen = false;
        for (const Point& f : found)
            seen = seen || std::hypot(y->y.x - f.x, y->y.y - f.y) < 1e-9;
        if (seen)
            continue;
        found.push_back(y->y);
        try {
            Match m;
            m.y = y->y;
            m.fb = point_fields(y->jets ? *y->jets : b(y->y, 4), mb.mode, mb.pair, cfg.regularity);
            bool same = true;
            for (std::size_t k = 0; k < 4; ++k)
                same = same && std::abs(m.fb.I[k] - I[k]) <=
                                   cfg.locate_tol * std::max({std::abs(I[k]), std::abs(m.fb.I[k]), iscale[k]});
            if (!same)
                continue;
            m.rel = 0.0;
            for (std::size_t f = 0; f < fields.size(); ++f)
                m.rel = std::max(m.rel, field_discrepancy(fields[f], m.fb.fields[f], scales[f]));
            if (!std::isfinite(m.rel))
                continue;
            if (!best || m.rel < best->rel)
                best = m;
        } catch (const std::runtime_error&) {
        }
        if (best && best->rel <= cfg.tol)
            break;
    }
    return best;
}

struct Direction {
    std::size_t usable = 0;
    std::size_t located = 0; // a partner with the same invariants exists
    std::size_t matched = 0; // and it reproduces every field within tol
    std::vector<double> worst;         // over located points, relative per field
    std::vector<double> worst_matched; // over matched points

    double fraction(std::size_t n) const { return usable ? static_cast<double>(n) / static_cast<double>(usable) : 0.0; }
};

Direction compare_into(const NaturalModel& ma, const NaturalModel& mb, const OperatorField& b,
                       const std::array<double, 4>& iscale, const std::vector<double>& scales,
                       const EquivalenceConfig& cfg)
{
    const std::size_t nf = scales.size();
    auto results = parallel_map<std::optional<std::vector<double>>>(ma.samples.size(), [&](std::size_t n) {
        const ModelSample& s = ma.samples[n];
        std::optional<std::vector<double>> out;
        if (!s.usable)
            return out;
        const auto m = locate(mb, b, s.I, iscale, s.fields, scales, cfg);
        if (!m)
            return out;
        out.emplace(nf);
        for (std::size_t f = 0; f < nf; ++f)
            (*out)[f] = field_discrepancy(s.fields[f], m->fb.fields[f], scales[f]);
        return out;
    });
    Direction d;
    d.worst.assign(nf, 0.0);
    d.worst_matched.assign(nf, 0.0);
    for (std::size_t n = 0; n < results.size(); ++n) {
        if (!ma.samples[n].usable)
            continue;
        ++d.usable;
        if (!results[n])
            continue;
        ++d.located;
        const auto& r = *results[n];
        const bool ok = *std::max_element(r.begin(), r.end()) <= cfg.tol;
        d.matched += ok ? 1 : 0;
        for (std::size_t f = 0; f < nf; ++f) {
            d.worst[f] = std::max(d.worst[f], r[f]);
            if (ok)
                d.worst_matched[f] = std::max(d.worst_matched[f], r[f]);
        }
    }
    return d;
}

double median_abs(std::vector<double> v)
{
    if (v.empty())
        return std::numeric_limits<double>::min();
    for (double& x : v)
        x = std::abs(x);
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return std::max(*mid, std::numeric_limits<double>::min());
}

// Median |value| over the usable samples of both models; the maximum is dominated by points near lambda = 0.
std::vector<double> field_scales(const NaturalModel& a, const NaturalModel& b)
{
    const std::size_t nf = a.field_names.size();
    std::vector<double> s(nf);
    for (std::size_t f = 0; f < nf; ++f) {
        std::vector<double> v;
        for (const NaturalModel* m : {&a, &b})
            for (const ModelSample& x : m->samples)
                if (x.usable)
                    v.push_back(x.fields[f]);
        s[f] = median_abs(std::move(v));
    }
    return s;
}

std::array<double, 4> invariant_scales(const NaturalModel& a, const NaturalModel& b)
{
    std::array<double, 4> s{};
    for (std::size_t k = 0; k < 4; ++k) {
        std::vector<double> v;
        for (const NaturalModel* m : {&a, &b})
            for (const ModelSample& x : m->samples)
                if (x.usable)
                    v.push_back(x.I[k]);
        s[k] = median_abs(std::move(v));
    }
    return s;
}

std::vector<double> gauss_legendre_nodes(int n, std::vector<double>& weights)
{
    std::vector<double> x(static_cast<std::size_t>(n));
    weights.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16)
                break;
        }
        x[static_cast<std::size_t>(i)] = z;
        weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return x;
}

// Integral of theta_diff = y^* theta_B - theta_A around a square centred in A's first rectangle.
// Every node needs a partner that reproduces the fields; otherwise the square shrinks.
void loop_guard(const NaturalModel& ma, const OperatorField& a, const NaturalModel& mb, const OperatorField& b,
                const std::array<double, 4>& iscale, const std::vector<double>& scales, const EquivalenceConfig& cfg,
                ObstructionReport& rep)
{
    const Rect& r = ma.grid.rects.front();
    const double cx = 0.5 * (r.x0 + r.x1), cy = 0.5 * (r.y0 + r.y1);
    std::vector<double> w;
    const std::vector<double> z = gauss_legendre_nodes(8, w);
    struct Node {
        Point x;
        std::array<double, 2> dx;
        double w;
    };
    for (const double frac : {0.25, 0.125, 0.0625}) {
        const double h = frac * std::min(r.x1 - r.x0, r.y1 - r.y0);
        // corners counterclockwise
        const std::array<Point, 5> c = {
            {{cx - h, cy - h}, {cx + h, cy - h}, {cx + h, cy + h}, {cx - h, cy + h}, {cx - h, cy - h}}};
        std::vector<Node> nodes;
        for (int e = 0; e < 4; ++e)
            for (std::size_t k = 0; k < z.size(); ++k) {
                const double t = 0.5 * (z[k] + 1.0);
                const Point p{c[e].x + t * (c[e + 1].x - c[e].x), c[e].y + t * (c[e + 1].y - c[e].y)};
                nodes.push_back({p, {0.5 * (c[e + 1].x - c[e].x), 0.5 * (c[e + 1].y - c[e].y)}, w[k]});
            }
        auto vals = parallel_map<std::optional<double>>(nodes.size(), [&](std::size_t n) -> std::optional<double> {
            try {
                const PointFields fa = point_fields(a(nodes[n].x, 4), ma.mode, ma.pair, cfg.regularity);
                const auto m = locate(mb, b, fa.I, iscale, fa.fields, scales, cfg);
                if (!m || m->rel > cfg.tol)
                    return std::nullopt;
                const auto& JA = fa.jac;
                const auto& JB = m->fb.jac;
                const double det = JB[0][0] * JB[1][1] - JB[0][1] * JB[1][0];
                const std::array<std::array<double, 2>, 2> JBi = {
                    {{JB[1][1] / det, -JB[0][1] / det}, {-JB[1][0] / det, JB[0][0] / det}}};
                double integrand = 0.0;
                for (int i = 0; i < 2; ++i) {
                    double pulled = 0.0;
                    for (int k = 0; k < 2; ++k) {
                        const double dy = JBi[k][0] * JA[0][i] + JBi[k][1] * JA[1][i];
                        pulled += m->fb.theta[k].value() * dy;
                    }
                    integrand += (pulled - fa.theta[i].value()) * nodes[n].dx[static_cast<std::size_t>(i)];
                }
                return nodes[n].w * integrand;
            } catch (const std::runtime_error&) {
                return std::nullopt;
            }
        });
        if (std::any_of(vals.begin(), vals.end(), [](const auto& v) { return !v; }))
            continue;
        double sum = 0.0;
        for (const auto& v : vals)
            sum += *v;
        rep.evaluated = true;
        rep.loop_points = static_cast<int>(nodes.size());
        rep.loop_integral = sum;
        return;
    }
}

Verdict compare(const OperatorField& a, const DomainGrid& ga, const OperatorField& b, const DomainGrid& gb,
                FieldMode mode, const EquivalenceConfig& cfg)
{
    Verdict v;
    std::vector<ModelSample> sa = sample_operator(a, ga, mode, cfg.regularity);
    std::vector<ModelSample> sb = sample_operator(b, gb, mode, cfg.regularity);
    const std::vector<const std::vector<ModelSample>*> sets{&sa, &sb};
    const auto pair = select_pair(sets, cfg);
    if (!pair) {
        v.answer = Answer::Inconclusive;
        v.reason = "not in general position: insufficient regular area for every invariant pair";
        return v;
    }
    v.pair = pair;
    const NaturalModel ma = finalize(std::move(sa), ga, mode, *pair, cfg.jacobian_floor, cfg);
    const NaturalModel mb = finalize(std::move(sb), gb, mode, *pair, cfg.jacobian_floor, cfg);
    v.usable = {ma.usable_fraction, mb.usable_fraction};
    if (ma.usable_fraction < cfg.min_regular || mb.usable_fraction < cfg.min_regular) {
        v.answer = Answer::Inconclusive;
        v.reason = "insufficient regular area";
        return v;
    }
    const std::vector<double> scales = field_scales(ma, mb);
    const std::array<double, 4> iscale = invariant_scales(ma, mb);
    const Direction ab = compare_into(ma, mb, b, iscale, scales, cfg);
    const Direction ba = compare_into(mb, ma, a, iscale, scales, cfg);
    v.located = {ab.fraction(ab.located), ba.fraction(ba.located)};
    v.matched = {ab.fraction(ab.matched), ba.fraction(ba.matched)};
    v.overlap = std::max(v.matched[0], v.matched[1]);
    const double located = std::max(v.located[0], v.located[1]);
    const bool agree = v.overlap >= cfg.overlap;
    // diagnostics from the better-matched direction (both on a tie, which keeps the verdict symmetric)
    std::vector<const Direction*> best;
    if (v.matched[0] >= v.matched[1])
        best.push_back(&ab);
    if (v.matched[1] >= v.matched[0])
        best.push_back(&ba);
    for (std::size_t f = 0; f < scales.size(); ++f) {
        FieldDiagnostic d;
        d.name = ma.field_names[f];
        d.scale = scales[f];
        for (const Direction* dir : best)
            d.max_discrepancy = std::max(d.max_discrepancy, agree ? dir->worst_matched[f] : dir->worst[f]);
        d.flagged = d.max_discrepancy > cfg.tol;
        v.max_discrepancy = std::max(v.max_discrepancy, d.max_discrepancy);
        v.fields.push_back(d);
    }
    if (located < cfg.overlap) {
        v.answer = Answer::No;
        v.reason = "image mismatch";
        return v;
    }
    if (!agree) {
        v.answer = Answer::No;
        std::string names;
        for (const auto& d : v.fields)
            if (d.flagged)
                names += (names.empty() ? "" : ", ") + d.name;
        v.reason = "field mismatch: " + names;
        return v;
    }
    v.answer = Answer::Yes;
    v.reason = "natural models agree";
    if (mode == FieldMode::Bundle) {
        ObstructionReport rep;
        rep.curvature_residual = v.fields.back().max_discrepancy;
        loop_guard(ma, a, mb, b, iscale, scales, cfg, rep);
        rep.closed = rep.curvature_residual <= cfg.tol && (!rep.evaluated || std::abs(rep.loop_integral) <= cfg.tol);
        v.obstruction = rep;
        if (!rep.closed) {
            v.answer = Answer::No;
            v.reason = "connection difference is not closed";
        }
    }
    return v;
}

} // namespace

Verdict equivalent_scalar(const OperatorField& a, const DomainGrid& ga, const OperatorField& b, const DomainGrid& gb,
                          const EquivalenceConfig& cfg)
{
    return compare(a, ga, b, gb, FieldMode::Scalar, cfg);
}

Verdict equivalent_bundle(const OperatorField& a, const DomainGrid& ga, const OperatorField& b, const DomainGrid& gb,
                          const EquivalenceConfig& cfg)
{
    return compare(a, ga, b, gb, FieldMode::Bundle, cfg);
}

Jet2 normalization_factor(const Operator3<Jet2>& a, const RegularityConfig& cfg)
{
    const Symbol3<Jet2> s = a.principal();
    const OneForm theta = conformal_theta(s, cfg).theta;
    const Sym2Form<Jet2> g = g_k(s, -1.0 / 3.0);
    // sign fixed so that the metric is positive definite on hyperbolic symbols
    const Jet2 lambda = -apply(g, std::array<Jet2, 2>{theta[0], theta[1]}, std::array<Jet2, 2>{theta[0], theta[1]});
    if (!(lambda.value() > 0.0))
        throw NormalizationError("normalization needs lambda > 0");
    return lambda;
}

Operator3<Jet2> normalize_at(const OperatorField& a, Point p, int order, const RegularityConfig& cfg)
{
    const Operator3<Jet2> full = a(p, order + 3);
    const Jet2 f = rpow(normalization_factor(full, cfg), -1.5);
    Operator3<Jet2> r;
    for (std::size_t n = 0; n < 10; ++n)
        r[n] = (f * full[n]).truncated(order);
    return r;
}

OperatorField normalize(OperatorField a, RegularityConfig cfg)
{
    return [a = std::move(a), cfg](Point p, int order) { return normalize_at(a, p, order, cfg); };
}

Verdict equation_equivalent(const OperatorField& a, const DomainGrid& ga, const OperatorField& b, const DomainGrid& gb,
                            const EquivalenceConfig& cfg)
{
    const OperatorField a0 = normalize(a, cfg.regularity);
    const OperatorField b0 = normalize(b, cfg.regularity);
    Verdict plus = equivalent_bundle(a0, ga, b0, gb, cfg);
    plus.branch = 1;
    if (plus.answer == Answer::Yes)
        return plus;
    Verdict minus = equivalent_bundle(a0, ga, negated(b0), gb, cfg);
    minus.branch = -1;
    if (minus.answer == Answer::Yes)
        return minus;
    if (plus.answer == Answer::Inconclusive && minus.answer == Answer::Inconclusive)
        return plus;
    // report the branch that came closer
    Verdict& v = (plus.answer == Answer::Inconclusive) ? minus
                 : (minus.answer == Answer::Inconclusive) ? plus
                 : (minus.overlap > plus.overlap ||
                    (minus.overlap == plus.overlap && minus.max_discrepancy < plus.max_discrepancy))
                     ? minus
                     : plus;
    v.answer = Answer::No;
    v.reason = "neither B0 nor -B0 matches: " + v.reason;
    return v;
}

} // namespace invar3
