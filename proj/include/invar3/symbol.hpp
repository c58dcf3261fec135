#pragma once

#include "invar3/jet.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace invar3 {

struct SingularSymbol : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultSingularEps = 1e-9;

// sigma = a1 dx^3 + 3 a2 dx^2 dy + 3 a3 dx dy^2 + a4 dy^3. The a's are the
// components of the symmetric tensor: a_{ijk} = a_{1 + number of 2-indices}.
template <class T> struct Symbol3 {
    T a1{}, a2{}, a3{}, a4{};

    T& comp(int n) { return n == 0 ? a1 : n == 1 ? a2 : n == 2 ? a3 : a4; }
    const T& comp(int n) const { return n == 0 ? a1 : n == 1 ? a2 : n == 2 ? a3 : a4; }
    // Tensor component with 0-based indices.
    const T& operator()(int i, int j, int k) const { return comp(i + j + k); }
};

enum class Variance { Covariant, Contravariant };

// g11 u1^2 + g12 u1 u2 + g22 u2^2, i.e. the matrix [[g11, g12/2], [g12/2, g22]].
template <class T> struct Sym2Form {
    T g11{}, g12{}, g22{};
    Variance variance = Variance::Contravariant;

    T entry(int i, int j) const
    {
        if (i == 0 && j == 0)
            return g11;
        if (i == 1 && j == 1)
            return g22;
        return g12 * 0.5;
    }
};

enum class SymbolType { Hyperbolic, Ultrahyperbolic, Singular };

struct Classification {
    SymbolType type = SymbolType::Singular;
    double delta = 0.0;
    double normalized_delta = 0.0;
    double eps = kDefaultSingularEps;
};

std::string to_string(SymbolType t);

inline Symbol3<double> values(const Symbol3<Jet2>& s) { return {s.a1.value(), s.a2.value(), s.a3.value(), s.a4.value()}; }
inline Symbol3<double> values(const Symbol3<double>& s) { return s; }

template <class T> T discriminant(const Symbol3<T>& s)
{
    const T& a1 = s.a1;
    const T& a2 = s.a2;
    const T& a3 = s.a3;
    const T& a4 = s.a4;
    return 6.0 * a1 * a2 * a3 * a4 - 4.0 * (a1 * a3 * a3 * a3 + a4 * a2 * a2 * a2) + 3.0 * a2 * a2 * a3 * a3 -
           a1 * a1 * a4 * a4;
}

template <class T> Sym2Form<T> hessian(const Symbol3<T>& s)
{
    return {s.a1 * s.a3 - s.a2 * s.a2, s.a1 * s.a4 - s.a3 * s.a2, s.a2 * s.a4 - s.a3 * s.a3, Variance::Contravariant};
}

template <class T> T form_det(const Sym2Form<T>& g) { return g.g11 * g.g22 - 0.25 * (g.g12 * g.g12); }

template <class T> T hessian2(const Symbol3<T>& s)
{
    const Sym2Form<T> h = hessian(s);
    return 4.0 * h.g11 * h.g22 - h.g12 * h.g12;
}

Classification classify(const Symbol3<double>& s, double eps = kDefaultSingularEps);

inline void require_regular(const Symbol3<double>& s, double eps)
{
    const Classification c = classify(s, eps);
    if (c.type == SymbolType::Singular)
        throw SingularSymbol("singular symbol: normalized discriminant " + std::to_string(c.normalized_delta));
}

template <class T> Sym2Form<T> inverse(const Sym2Form<T>& g)
{
    const T det = form_det(g);
    if (value_of(det) == 0.0)
        throw SingularSymbol("degenerate quadratic form");
    return {g.g22 / det, -1.0 * g.g12 / det, g.g11 / det,
            g.variance == Variance::Covariant ? Variance::Contravariant : Variance::Covariant};
}

template <class T> T apply(const Sym2Form<T>& g, const std::array<T, 2>& u, const std::array<T, 2>& v)
{
    return g.g11 * u[0] * v[0] + 0.5 * g.g12 * (u[0] * v[1] + u[1] * v[0]) + g.g22 * u[1] * v[1];
}

// W = 4 / (cbrt D)^2 ((a2a4 - a3^2) dx^2 + (a2a3 - a1a4) dx dy + (a1a3 - a2^2) dy^2).
template <class T> Sym2Form<T> wagner_metric(const Symbol3<T>& s, double eps = kDefaultSingularEps)
{
    require_regular(values(s), eps);
    const T c = cbrt(discriminant(s));
    const T f = 4.0 / (c * c);
    return {f * (s.a2 * s.a4 - s.a3 * s.a3), f * (s.a2 * s.a3 - s.a1 * s.a4), f * (s.a1 * s.a3 - s.a2 * s.a2),
            Variance::Covariant};
}

// Hess2^k Hess. Multiples of 1/3 use the real cube root so D < 0 is allowed.
template <class T> Sym2Form<T> g_k(const Symbol3<T>& s, double k, double eps = kDefaultSingularEps)
{
    require_regular(values(s), eps);
    const T d = discriminant(s);
    const double n3 = std::round(3.0 * k);
    T factor;
    if (std::abs(3.0 * k - n3) < 1e-12) {
        factor = ipow(cbrt(d), static_cast<int>(n3));
    } else {
        if (!(value_of(d) > 0.0))
            throw DomainError("g_k with non-third exponent needs a positive discriminant");
        factor = rpow(d, k);
    }
    const Sym2Form<T> h = hessian(s);
    return {factor * h.g11, factor * h.g12, factor * h.g22, Variance::Contravariant};
}

using Mat2 = std::array<std::array<double, 2>, 2>;

Mat2 inverse(const Mat2& m);

// Contravariant pushforward by a linear map L acting on vectors.
template <class T> Symbol3<T> push_symbol(const Symbol3<T>& s, const std::array<std::array<T, 2>, 2>& L)
{
    Symbol3<T> r;
    for (int n = 0; n < 4; ++n) {
        // component n has n indices equal to 2: (1,1,1), (1,1,2), (1,2,2), (2,2,2)
        const int out[3] = {n >= 3 ? 1 : 0, n >= 2 ? 1 : 0, n >= 1 ? 1 : 0};
        T acc = s.a1 * 0.0;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c)
                    acc += L[out[0]][a] * L[out[1]][b] * L[out[2]][c] * s(a, b, c);
        r.comp(n) = acc;
    }
    return r;
}

template <class T> Sym2Form<T> push_contravariant(const Sym2Form<T>& g, const std::array<std::array<T, 2>, 2>& L)
{
    std::array<std::array<T, 2>, 2> m{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            T acc = g.g11 * 0.0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    acc += L[i][a] * L[j][b] * g.entry(a, b);
            m[i][j] = acc;
        }
    return {m[0][0], 2.0 * m[0][1], m[1][1], g.variance};
}

// Covariant pushforward: components transform with the inverse map Linv.
template <class T>
Sym2Form<T> push_covariant(const Sym2Form<T>& g, const std::array<std::array<T, 2>, 2>& Linv)
{
    std::array<std::array<T, 2>, 2> m{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            T acc = g.g11 * 0.0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    acc += Linv[a][i] * Linv[b][j] * g.entry(a, b);
            m[i][j] = acc;
        }
    return {m[0][0], 2.0 * m[0][1], m[1][1], g.variance};
}

} // namespace invar3
