#pragma once

#include "invar3/expr.hpp"
#include "invar3/jet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace testsupport {

using invar3::Expr;
using invar3::Jet2;

inline double rel_err(double a, double b, double floor = 1.0)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double jet_diff(const Jet2& a, const Jet2& b)
{
    const int K = std::min(a.order(), b.order());
    double m = 0.0;
    for (std::size_t k = 0; k < Jet2::size_for(K); ++k)
        m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : g_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g_); }
    std::mt19937_64& engine() { return g_; }

private:
    std::mt19937_64 g_;
};

inline Expr num(double v) { return Expr(v); }

// Smooth expression, bounded and well-defined on [-1,1]^2.
inline Expr random_smooth(Rng& r, int depth)
{
    const Expr x = Expr::x(), y = Expr::y();
    if (depth == 0) {
        switch (r.integer(0, 3)) {
        case 0:
            return num(r.uniform(-1.0, 1.0));
        case 1:
            return num(r.uniform(-1.0, 1.0)) * x;
        case 2:
            return num(r.uniform(-1.0, 1.0)) * y;
        default:
            return num(r.uniform(-0.5, 0.5)) * x * y;
        }
    }
    const Expr a = random_smooth(r, depth - 1);
    const Expr b = random_smooth(r, depth - 1);
    switch (r.integer(0, 9)) {
    case 0:
        return a + b;
    case 1:
        return a - b;
    case 2:
        return a * b;
    case 3:
        return a / (num(2.5) + sin(b));
    case 4:
        return exp(num(0.5) * a);
    case 5:
        return sin(a) + cos(b);
    case 6:
        return ln(num(2.5) + cos(a));
    case 7:
        return sqrt(num(3.0) + sin(a));
    case 8:
        return cbrt(num(2.0) + cos(a)) - -b;
    default:
        return pow(a, 2) - pow(num(2.0) + sin(b), -1);
    }
}

// Random polynomial of total degree d.
inline Expr random_poly(Rng& r, int d, double amp = 1.0)
{
    Expr e = num(r.uniform(-amp, amp));
    for (int i = 0; i <= d; ++i)
        for (int j = 0; i + j <= d; ++j) {
            if (i + j == 0)
                continue;
            Expr m = num(r.uniform(-amp, amp));
            if (i)
                m = m * pow(Expr::x(), i);
            if (j)
                m = m * pow(Expr::y(), j);
            e = e + m;
        }
    return e;
}

} // namespace testsupport

#include "invar3/symbol.hpp"

namespace testsupport {

// Regular-looking symbol field: constant base plus smooth perturbations.
inline invar3::Symbol3<Expr> random_symbol_field(Rng& r, double amp = 0.3)
{
    for (;;) {
        invar3::Symbol3<double> base{r.uniform(-2, 2), r.uniform(-2, 2), r.uniform(-2, 2), r.uniform(-2, 2)};
        if (std::abs(invar3::classify(base).normalized_delta) < 0.05)
            continue;
        invar3::Symbol3<Expr> s;
        for (int n = 0; n < 4; ++n)
            s.comp(n) = num(base.comp(n)) + num(amp) * random_smooth(r, 2);
        return s;
    }
}

inline invar3::Point random_point(Rng& r, double h = 0.8) { return {r.uniform(-h, h), r.uniform(-h, h)}; }

// sigma = (a dx + b dy) dx dy
inline invar3::Symbol3<Expr> hyperbolic_normal_form(const Expr& a, const Expr& b)
{
    return {num(0.0), a / num(3.0), b / num(3.0), num(0.0)};
}

// sigma = (a dx + b dy)(dx^2 + dy^2)
inline invar3::Symbol3<Expr> ultrahyperbolic_normal_form(const Expr& a, const Expr& b)
{
    return {a, b / num(3.0), a / num(3.0), b};
}

} // namespace testsupport

#include "invar3/transform.hpp"

namespace testsupport {

// Polynomial near-identity map with small quadratic and cubic terms.
inline invar3::Diffeo random_diffeo(Rng& r, double amp = 0.08)
{
    const Expr x = Expr::x(), y = Expr::y();
    auto part = [&](const Expr& lin) {
        Expr e = lin + num(r.uniform(-0.3, 0.3));
        e = e + num(r.uniform(-0.1, 0.1)) * x + num(r.uniform(-0.1, 0.1)) * y;
        e = e + num(r.uniform(-amp, amp)) * x * x + num(r.uniform(-amp, amp)) * x * y +
            num(r.uniform(-amp, amp)) * y * y;
        e = e + num(r.uniform(-amp, amp)) * pow(x, 3) + num(r.uniform(-amp, amp)) * x * y * y;
        return e;
    };
    return {part(x), part(y)};
}

// Positive smooth function for gauges and rescalings.
inline Expr random_positive(Rng& r) { return exp(num(0.4) * random_smooth(r, 1)); }

inline invar3::Operator3<Expr> principal_operator(const invar3::Symbol3<Expr>& s)
{
    invar3::Operator3<Expr> a;
    for (std::size_t n = 0; n < 10; ++n)
        a[n] = num(0.0);
    for (int n = 0; n < 4; ++n)
        a[static_cast<std::size_t>(n)] = s.comp(n);
    return a;
}

inline invar3::Operator3<Expr> random_operator_field(Rng& r)
{
    invar3::Operator3<Expr> a = principal_operator(random_symbol_field(r));
    for (std::size_t n = 4; n < 10; ++n)
        a[n] = random_smooth(r, 2);
    return a;
}

} // namespace testsupport
