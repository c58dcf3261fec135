#include "invar3/connection.hpp"

#include "invar3/linalg.hpp"

#include <algorithm>

namespace invar3 {

namespace {

template <class T> T coef(const Symbol3<T>& s, int l, const std::array<int, 3>& ijk, int p, int q, int r)
{
    T acc = s.a1 * 0.0;
    if (r != l)
        return acc;
    const int I = ijk[0], J = ijk[1], K = ijk[2];
    if (p == I)
        acc += s(q, J, K);
    if (p == J)
        acc += s(I, q, K);
    if (p == K)
        acc += s(I, J, q);
    return acc;
}

template <class T> std::vector<T> wagner_matrix(const Symbol3<T>& s)
{
    std::vector<T> m;
    m.reserve(64);
    for (int l = 0; l < 2; ++l)
        for (int n = 0; n < 4; ++n)
            for (int u = 0; u < 8; ++u)
                m.push_back(coef(s, l, kSym3Index[static_cast<std::size_t>(n)], u / 4, (u / 2) % 2, u % 2));
    return m;
}

constexpr std::array<std::array<int, 3>, 6> kChernUnknowns = {
    {{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {1, 0, 0}, {1, 0, 1}, {1, 1, 1}}};

template <class T> std::vector<T> chern_matrix(const Symbol3<T>& s)
{
    std::vector<T> m;
    m.reserve(64);
    for (int l = 0; l < 2; ++l)
        for (int n = 0; n < 4; ++n) {
            const auto& ijk = kSym3Index[static_cast<std::size_t>(n)];
            for (const auto& u : kChernUnknowns) {
                T c = coef(s, l, ijk, u[0], u[1], u[2]);
                if (u[1] != u[2])
                    c += coef(s, l, ijk, u[0], u[2], u[1]);
                m.push_back(c);
            }
            for (int w = 0; w < 2; ++w)
                m.push_back(w == l ? -1.0 * s.comp(n) : s.a1 * 0.0);
        }
    return m;
}

std::vector<Jet2> rhs(const Symbol3<Jet2>& s)
{
    std::vector<Jet2> b;
    for (int l = 0; l < 2; ++l)
        for (int n = 0; n < 4; ++n)
            b.push_back(-s.comp(n).d(l));
    return b;
}

} // namespace

int AffineConnection::order() const
{
    int k = Jet2::kMaxOrder;
    for (const auto& g : gamma)
        k = std::min(k, g.order());
    return k;
}

bool AffineConnection::symmetric() const
{
    for (int k = 0; k < 2; ++k) {
        const Jet2& a = (*this)(k, 0, 1);
        const Jet2& b = (*this)(k, 1, 0);
        for (std::size_t n = 0; n < std::min(a.size(), b.size()); ++n)
            if (a[n] != b[n])
                return false;
    }
    return true;
}

std::vector<double> wagner_system(const Symbol3<double>& s) { return wagner_matrix(s); }
std::vector<double> chern_system(const Symbol3<double>& s) { return chern_matrix(s); }

std::array<Jet2, 8> covariant_derivative_sym3(const AffineConnection& g, const Symbol3<Jet2>& s)
{
    std::array<Jet2, 8> out;
    for (int l = 0; l < 2; ++l)
        for (int n = 0; n < 4; ++n) {
            const auto& ijk = kSym3Index[static_cast<std::size_t>(n)];
            Jet2 acc = s.comp(n).d(l);
            for (int m = 0; m < 2; ++m) {
                acc += g(ijk[0], m, l) * s(m, ijk[1], ijk[2]);
                acc += g(ijk[1], m, l) * s(ijk[0], m, ijk[2]);
                acc += g(ijk[2], m, l) * s(ijk[0], ijk[1], m);
            }
            out[static_cast<std::size_t>(l * 4 + n)] = acc;
        }
    return out;
}

AffineConnection wagner_connection(const Symbol3<Jet2>& s, double eps)
{
    require_regular(values(s), eps);
    const JetSolution sol = solve(wagner_matrix(s), rhs(s));
    AffineConnection g;
    for (std::size_t u = 0; u < 8; ++u)
        g.gamma[u] = sol.x[u];
    g.cond1 = sol.cond1;
    return g;
}

ChernResult chern_connection(const Symbol3<Jet2>& s, double eps)
{
    require_regular(values(s), eps);
    const JetSolution sol = solve(chern_matrix(s), rhs(s));
    ChernResult r;
    for (std::size_t u = 0; u < 6; ++u) {
        const auto& idx = kChernUnknowns[u];
        r.gamma(idx[0], idx[1], idx[2]) = sol.x[u];
        r.gamma(idx[0], idx[2], idx[1]) = sol.x[u];
    }
    r.gamma.cond1 = sol.cond1;
    r.omega[0] = sol.x[6];
    r.omega[1] = sol.x[7];
    return r;
}

TorsionTensor torsion(const AffineConnection& g)
{
    TorsionTensor t;
    for (int k = 0; k < 2; ++k)
        t.t[static_cast<std::size_t>(k)] = g(k, 0, 1) - g(k, 1, 0);
    return t;
}

OneForm torsion_form(const AffineConnection& g)
{
    const TorsionTensor t = torsion(g);
    OneForm f;
    f[0] = -t.t[1];
    f[1] = t.t[0];
    return f;
}

std::array<std::array<Jet2, 2>, 2> curvature(const AffineConnection& g)
{
    std::array<std::array<Jet2, 2>, 2> R;
    for (int m = 0; m < 2; ++m)
        for (int i = 0; i < 2; ++i) {
            Jet2 acc = g(m, i, 1).dx() - g(m, i, 0).dy();
            for (int k = 0; k < 2; ++k)
                acc += g(k, i, 1) * g(m, k, 0) - g(k, i, 0) * g(m, k, 1);
            R[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)] = acc;
        }
    return R;
}

TwoForm exterior_derivative(const OneForm& a) { return {a[1].dx() - a[0].dy()}; }

std::array<std::array<Jet2, 2>, 2> torsion_derivative(const AffineConnection& g)
{
    const TorsionTensor t = torsion(g);
    std::array<std::array<Jet2, 2>, 2> out;
    for (int l = 0; l < 2; ++l) {
        const Jet2 trace = g(0, 0, l) + g(1, 1, l);
        for (int k = 0; k < 2; ++k) {
            Jet2 acc = t.t[static_cast<std::size_t>(k)].d(l) - trace * t.t[static_cast<std::size_t>(k)];
            for (int m = 0; m < 2; ++m)
                acc += g(k, m, l) * t.t[static_cast<std::size_t>(m)];
            out[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)] = acc;
        }
    }
    return out;
}

std::string to_string(GroupType t)
{
    switch (t) {
    case GroupType::ConstantType:
        return "constant";
    case GroupType::SolvableType:
        return "solvable";
    case GroupType::Generic:
        return "generic";
    }
    return "generic";
}

Symbol3<Jet2> eval_symbol(const Symbol3<Expr>& field, Point p, int order)
{
    return {field.a1.eval_jet(p, order), field.a2.eval_jet(p, order), field.a3.eval_jet(p, order),
            field.a4.eval_jet(p, order)};
}

GroupTypeReport group_type_test(const Symbol3<Expr>& field, const std::vector<Point>& samples, double tol, double eps)
{
    GroupTypeReport rep;
    for (const Point& p : samples) {
        const AffineConnection g = wagner_connection(eval_symbol(field, p, 2), eps);
        const TorsionTensor t = torsion(g);
        rep.max_torsion = std::max({rep.max_torsion, std::abs(t.t[0].value()), std::abs(t.t[1].value())});
        const auto dt = torsion_derivative(g);
        for (const auto& row : dt)
            for (const auto& v : row)
                rep.max_torsion_derivative = std::max(rep.max_torsion_derivative, std::abs(v.value()));
    }
    if (rep.max_torsion < tol)
        rep.type = GroupType::ConstantType;
    else if (rep.max_torsion_derivative < tol)
        rep.type = GroupType::SolvableType;
    else
        rep.type = GroupType::Generic;
    return rep;
}

} // namespace invar3
