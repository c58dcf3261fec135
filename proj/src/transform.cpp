#include "invar3/transform.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <map>

namespace invar3 {

namespace {

double binom(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return r;
}

Jet2 derivative(const Jet2& f, int i, int j)
{
    Jet2 r = f;
    for (int s = 0; s < i; ++s)
        r = r.dx();
    for (int s = 0; s < j; ++s)
        r = r.dy();
    return r;
}

// Expansion of d^beta (g o phi) as sum_gamma C_gamma (d^gamma g) o phi.
using ChainTerms = std::map<std::pair<int, int>, Jet2>;

ChainTerms chain_derivative(const ChainTerms& t, int l, const MapJets& m)
{
    const Jet2 du = m.u.d(l), dv = m.v.d(l);
    ChainTerms out;
    auto add = [&](std::pair<int, int> k, const Jet2& v) {
        auto it = out.find(k);
        if (it == out.end())
            out.emplace(k, v);
        else
            it->second += v;
    };
    for (const auto& [g, c] : t) {
        add(g, c.d(l));
        add({g.first + 1, g.second}, c * du);
        add({g.first, g.second + 1}, c * dv);
    }
    return out;
}

} // namespace

OperatorField operator_field(const Operator3<Expr>& a)
{
    return [a](Point p, int order) {
        Operator3<Jet2> r;
        for (std::size_t n = 0; n < 10; ++n)
            r[n] = a[n].eval_jet(p, order);
        return r;
    };
}

MapJets map_jets(const Diffeo& phi, Point x, int order) { return {phi.fx.eval_jet(x, order), phi.fy.eval_jet(x, order)}; }

Point inverse_point(const Diffeo& phi, Point q, Point guess)
{
    if (phi.inverse)
        return {(*phi.inverse)[0].eval(q), (*phi.inverse)[1].eval(q)};
    const double tol = 1e-14 * (1.0 + std::hypot(q.x, q.y));
    Point x = guess;
    double r = INFINITY;
    for (int it = 0; it < 100; ++it) {
        const MapJets m = map_jets(phi, x, 1);
        const double rx = m.u.value() - q.x, ry = m.v.value() - q.y;
        r = std::hypot(rx, ry);
        if (r < tol)
            return x;
        const double a = m.u.c(1, 0), b = m.u.c(0, 1), c = m.v.c(1, 0), d = m.v.c(0, 1);
        const double det = a * d - b * c;
        if (det == 0.0 || !std::isfinite(det))
            throw NotInvertible("diffeomorphism has a singular Jacobian");
        const double sx = (d * rx - b * ry) / det, sy = (-c * rx + a * ry) / det;
        double t = 1.0;
        Point best{x.x - sx, x.y - sy};
        for (int h = 0; h < 30; ++h, t *= 0.5) {
            const Point cand{x.x - t * sx, x.y - t * sy};
            try {
                const Point v = phi.apply(cand);
                if (std::hypot(v.x - q.x, v.y - q.y) < r) {
                    best = cand;
                    break;
                }
            } catch (const DomainError&) {
            }
        }
        if (best.x == x.x && best.y == x.y)
            break;
        x = best;
    }
    if (r < 1e3 * tol)
        return x;
    throw NotInvertible("Newton iteration for the inverse map did not converge");
}

MapJets inverse_jets(const Diffeo& phi, Point q, int order, Point guess)
{
    if (phi.inverse)
        return {(*phi.inverse)[0].eval_jet(q, order), (*phi.inverse)[1].eval_jet(q, order)};
    const Point x0 = inverse_point(phi, q, guess);
    const MapJets f = map_jets(phi, x0, order);
    const double a = f.u.c(1, 0), b = f.u.c(0, 1), c = f.v.c(1, 0), d = f.v.c(0, 1);
    const double det = a * d - b * c;
    const double ia = d / det, ib = -b / det, ic = -c / det, id = a / det;
    const Jet2 qx = Jet2::var_x(q.x, order), qy = Jet2::var_y(q.y, order);
    MapJets psi{x0.x + ia * (qx - q.x) + ib * (qy - q.y), x0.y + ic * (qx - q.x) + id * (qy - q.y)};
    psi.u[0] = x0.x;
    psi.v[0] = x0.y;
    for (int it = 0; it < order; ++it) {
        const Jet2 ru = compose(f.u, psi.u, psi.v) - qx;
        const Jet2 rv = compose(f.v, psi.u, psi.v) - qy;
        psi.u = psi.u - (ia * ru + ib * rv);
        psi.v = psi.v - (ic * ru + id * rv);
        psi.u[0] = x0.x;
        psi.v[0] = x0.y;
    }
    return psi;
}

double check_inverse(const Diffeo& phi, Point lo, Point hi, int n, double tol)
{
    if (!phi.inverse)
        return 0.0;
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Point x{lo.x + (hi.x - lo.x) * i / (n - 1), lo.y + (hi.y - lo.y) * j / (n - 1)};
            const Point q = phi.apply(x);
            const Point back{(*phi.inverse)[0].eval(q), (*phi.inverse)[1].eval(q)};
            worst = std::max(worst, std::hypot(back.x - x.x, back.y - x.y));
        }
    if (!(worst <= tol))
        throw InverseMismatch("supplied inverse does not invert the map (residual " + std::to_string(worst) + ")");
    return worst;
}

Operator3<Jet2> pushforward_at(const OperatorField& a, const Diffeo& phi, Point q, int order)
{
    return pushforward_at(a, phi, q, order, q);
}

Operator3<Jet2> pushforward_at(const OperatorField& a, const Diffeo& phi, Point q, int order, Point guess)
{
    const MapJets psi = inverse_jets(phi, q, order, guess);
    const Point x0{psi.u.value(), psi.v.value()};
    const MapJets m = map_jets(phi, x0, order + 3);
    const FormalOperator ra = to_formal(a(x0, order));

    std::array<Jet2, 10> b;
    for (auto& v : b)
        v = Jet2::constant(0.0, order);
    for (int i = 0; i <= 3; ++i) {
        ChainTerms t;
        t.emplace(std::make_pair(0, 0), Jet2::constant(1.0, order + 3));
        for (int s = 0; s < i; ++s)
            t = chain_derivative(t, 0, m);
        for (int j = 0; i + j <= 3; ++j) {
            if (j > 0)
                t = chain_derivative(t, 1, m);
            for (const auto& [g, c] : t)
                b[raw_index(g.first, g.second)] += ra(i, j) * c;
        }
    }
    FormalOperator out;
    for (std::size_t n = 0; n < 10; ++n)
        out.raw[n] = compose(b[n].truncated(order), psi.u, psi.v);
    return to_named(out);
}

OperatorField pushforward(OperatorField a, Diffeo phi)
{
    return [a = std::move(a), phi = std::move(phi)](Point q, int order) { return pushforward_at(a, phi, q, order); };
}

double check_gauge(const Expr& h, Point lo, Point hi, int n, double floor)
{
    double least = INFINITY;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            least = std::min(least, std::abs(h.eval({lo.x + (hi.x - lo.x) * i / (n - 1), lo.y + (hi.y - lo.y) * j / (n - 1)})));
    if (!(least >= floor))
        throw ZeroCrossing("gauge function vanishes on the window");
    return least;
}

OperatorField gauge(OperatorField a, Expr h, double floor)
{
    return [a = std::move(a), h = std::move(h), floor](Point p, int order) {
        const Jet2 hj = h.eval_jet(p, order + 3);
        if (!(std::abs(hj.value()) >= floor))
            throw ZeroCrossing("gauge function vanishes at the point");
        const FormalOperator ra = to_formal(a(p, order));
        const Jet2 inv = 1.0 / hj;
        FormalOperator out;
        for (int gi = 0; gi <= 3; ++gi)
            for (int gj = 0; gi + gj <= 3; ++gj) {
                Jet2 acc = Jet2::constant(0.0, order);
                for (int bi = gi; bi <= 3; ++bi)
                    for (int bj = gj; bi + bj <= 3; ++bj)
                        acc += (binom(bi, gi) * binom(bj, gj)) * ra(bi, bj) * derivative(inv, bi - gi, bj - gj);
                out(gi, gj) = (hj * acc).truncated(order);
            }
        return to_named(out);
    };
}

Operator3<Jet2> scale(const Operator3<Jet2>& a, const Jet2& f)
{
    Operator3<Jet2> r;
    for (std::size_t n = 0; n < 10; ++n)
        r[n] = f * a[n];
    return r;
}

OperatorField scaled(OperatorField a, Expr f)
{
    return [a = std::move(a), f = std::move(f)](Point p, int order) { return scale(a(p, order), f.eval_jet(p, order)); };
}

OperatorField negated(OperatorField a)
{
    return [a = std::move(a)](Point p, int order) { return scale(a(p, order), Jet2::constant(-1.0, order)); };
}

} // namespace invar3
