#include "invar3/quantize.hpp"

#include "invar3/linalg.hpp"

#include <algorithm>

namespace invar3 {

namespace {

double factorial(int n)
{
    double r = 1.0;
    for (int k = 2; k <= n; ++k)
        r *= k;
    return r;
}

void accumulate(WPoly& p, const std::array<int, 4>& key, const Jet2& v)
{
    auto it = p.find(key);
    if (it == p.end())
        p.emplace(key, v);
    else
        it->second += v;
}

FormalOperator uniform_order(std::array<std::optional<Jet2>, 10> entries)
{
    int K = Jet2::kMaxOrder;
    for (const auto& e : entries)
        if (e)
            K = std::min(K, e->order());
    FormalOperator f;
    for (std::size_t n = 0; n < 10; ++n)
        f.raw[n] = entries[n] ? entries[n]->truncated(K) : Jet2(K);
    return f;
}

} // namespace

int FormalOperator::order() const
{
    int K = Jet2::kMaxOrder;
    for (const auto& r : raw)
        K = std::min(K, r.order());
    return K;
}

FormalOperator to_formal(const Operator3<Jet2>& a)
{
    FormalOperator f;
    f(3, 0) = a[0];
    f(2, 1) = 3.0 * a[1];
    f(1, 2) = 3.0 * a[2];
    f(0, 3) = a[3];
    f(2, 0) = a[4];
    f(1, 1) = 2.0 * a[5];
    f(0, 2) = a[6];
    f(1, 0) = a[7];
    f(0, 1) = a[8];
    f(0, 0) = a[9];
    return f;
}

Operator3<Jet2> to_named(const FormalOperator& f)
{
    Operator3<Jet2> a;
    a[0] = f(3, 0);
    a[1] = f(2, 1) / 3.0;
    a[2] = f(1, 2) / 3.0;
    a[3] = f(0, 3);
    a[4] = f(2, 0);
    a[5] = f(1, 1) / 2.0;
    a[6] = f(0, 2);
    a[7] = f(1, 0);
    a[8] = f(0, 1);
    a[9] = f(0, 0);
    return a;
}

FormalOperator operator+(const FormalOperator& a, const FormalOperator& b)
{
    FormalOperator r;
    for (std::size_t n = 0; n < 10; ++n)
        r.raw[n] = a.raw[n] + b.raw[n];
    return r;
}

FormalOperator operator-(const FormalOperator& a, const FormalOperator& b)
{
    FormalOperator r;
    for (std::size_t n = 0; n < 10; ++n)
        r.raw[n] = a.raw[n] - b.raw[n];
    return r;
}

SymDerivation::SymDerivation(AffineConnection g, std::optional<OneForm> theta)
    : g_(std::move(g)), theta_(std::move(theta))
{
}

WPoly formal_function()
{
    WPoly p;
    p.emplace(std::array<int, 4>{0, 0, 0, 0}, Jet2::constant(1.0, Jet2::kMaxOrder));
    return p;
}

WPoly SymDerivation::apply(const WPoly& p) const
{
    WPoly out;
    for (const auto& [key, c] : p) {
        const int m[2] = {key[0], key[1]};
        for (int l = 0; l < 2; ++l) {
            std::array<int, 4> up = key;
            up[static_cast<std::size_t>(l)] += 1;
            std::array<int, 4> raise = up;
            raise[2 + static_cast<std::size_t>(l)] += 1;
            accumulate(out, raise, c);
            Jet2 d = c.d(l);
            if (theta_)
                d += (*theta_)[l] * c;
            accumulate(out, up, d);
        }
        for (int l = 0; l < 2; ++l) {
            if (m[l] == 0)
                continue;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    std::array<int, 4> k2 = key;
                    k2[static_cast<std::size_t>(l)] -= 1;
                    k2[static_cast<std::size_t>(i)] += 1;
                    k2[static_cast<std::size_t>(j)] += 1;
                    accumulate(out, k2, (-static_cast<double>(m[l])) * (g_(l, i, j) * c));
                }
        }
    }
    return out;
}

FormalOperator quantize_raw(const std::vector<Jet2>& raw, const AffineConnection& g, const std::optional<OneForm>& theta)
{
    const int k = static_cast<int>(raw.size()) - 1;
    if (k < 0 || k > 3)
        throw std::invalid_argument("quantize: symbol degree must be in [0, 3]");
    const SymDerivation ds(g, theta);
    WPoly p = formal_function();
    for (int s = 0; s < k; ++s)
        p = ds.apply(p);
    std::array<std::optional<Jet2>, 10> acc;
    const double kf = factorial(k);
    for (const auto& [key, c] : p) {
        const int m1 = key[0], m2 = key[1];
        if (m1 + m2 != k)
            continue;
        const Jet2& s = raw[static_cast<std::size_t>(m2)];
        const Jet2 term = (factorial(m1) * factorial(m2) / kf) * (s * c);
        auto& slot = acc[raw_index(key[2], key[3])];
        if (slot)
            *slot += term;
        else
            slot = term;
    }
    for (const auto& s : raw) {
        auto& slot = acc[0];
        const Jet2 z = 0.0 * s;
        if (slot)
            *slot += z;
        else
            slot = z;
    }
    return uniform_order(acc);
}

FormalOperator quantize(const Symbol3<Jet2>& s, const AffineConnection& g, const std::optional<OneForm>& theta)
{
    return quantize_raw({s.a1, 3.0 * s.a2, 3.0 * s.a3, s.a4}, g, theta);
}

FormalOperator quantize2(const std::array<Jet2, 3>& s, const AffineConnection& g, const std::optional<OneForm>& theta)
{
    return quantize_raw({s[0], 2.0 * s[1], s[2]}, g, theta);
}

FormalOperator quantize1(const std::array<Jet2, 2>& s, const AffineConnection& g, const std::optional<OneForm>& theta)
{
    return quantize_raw({s[0], s[1]}, g, theta);
}

FormalOperator quantize0(const Jet2& s, const AffineConnection& g, const std::optional<OneForm>& theta)
{
    return quantize_raw({s}, g, theta);
}

FormalOperator quantize_total(const TotalSymbol& t, const AffineConnection& g, const std::optional<OneForm>& theta)
{
    return quantize(t.s3, g, theta) + quantize2(t.s2, g, theta) + quantize1(t.s1, g, theta) +
           quantize0(t.s0, g, theta);
}

std::string to_string(ConnectionChoice c) { return c == ConnectionChoice::Chern ? "chern" : "wagner"; }

SplitResult split(const Operator3<Jet2>& a, ConnectionChoice choice, const std::optional<OneForm>& theta, double eps)
{
    SplitResult out;
    const Symbol3<Jet2> s3 = a.principal();
    out.gamma = choice == ConnectionChoice::Chern ? chern_connection(s3, eps).gamma : wagner_connection(s3, eps);
    FormalOperator r = to_formal(a);
    out.sigma.s3 = s3;
    r = r - quantize(s3, out.gamma, theta);
    out.sigma.s2 = {r(2, 0), r(1, 1) / 2.0, r(0, 2)};
    r = r - quantize2(out.sigma.s2, out.gamma, theta);
    out.sigma.s1 = {r(1, 0), r(0, 1)};
    r = r - quantize1(out.sigma.s1, out.gamma, theta);
    out.sigma.s0 = r(0, 0);
    return out;
}

std::array<Jet2, 3> subsymbol(const Operator3<Jet2>& a, const std::optional<OneForm>& theta, double eps)
{
    const Symbol3<Jet2> s3 = a.principal();
    const AffineConnection g = chern_connection(s3, eps).gamma;
    const FormalOperator r = to_formal(a) - quantize(s3, g, theta);
    return {r(2, 0), r(1, 1) / 2.0, r(0, 2)};
}

Jet2 apply_operator(const Operator3<Jet2>& a, const Jet2& f)
{
    const FormalOperator r = to_formal(a);
    if (f.order() < 3)
        throw JetOrderError("applying a third-order operator needs a 3-jet");
    Jet2 acc = 0.0 * r(0, 0) * f;
    for (int d = 0; d <= 3; ++d)
        for (int j = 0; j <= d; ++j) {
            const int i = d - j;
            Jet2 df = f;
            for (int s = 0; s < i; ++s)
                df = df.dx();
            for (int s = 0; s < j; ++s)
                df = df.dy();
            acc += r(i, j) * df;
        }
    return acc;
}

double box3(const Operator3<Jet2>& a, const Jet2& f)
{
    const FormalOperator r = to_formal(a);
    double acc = 0.0;
    for (int d = 0; d <= 3; ++d)
        for (int j = 0; j <= d; ++j)
            acc += r(d - j, j).value() * f.partial(d - j, j);
    return acc;
}

LineBundleConnection line_bundle_connection(const Operator3<Jet2>& a, double eps)
{
    const Symbol3<Jet2> s = a.principal();
    const std::array<Jet2, 3> S = subsymbol(a, std::nullopt, eps);
    const Sym2Form<Jet2> g = g_k(s, -1.0 / 3.0, eps);
    const std::vector<Jet2> M = {3.0 * s.a1, 3.0 * s.a2, g.g11,       3.0 * s.a2, 3.0 * s.a3,
                                 0.5 * g.g12, 3.0 * s.a3, 3.0 * s.a4, g.g22};
    const JetSolution sol = solve(M, {S[0], S[1], S[2]});
    LineBundleConnection out;
    out.theta[0] = sol.x[0];
    out.theta[1] = sol.x[1];
    out.lambda = sol.x[2];
    out.cond1 = sol.cond1;
    double res = 0.0, scale = 0.0;
    for (int r = 0; r < 3; ++r) {
        double v = S[static_cast<std::size_t>(r)].value();
        scale = std::max(scale, std::abs(v));
        for (int c = 0; c < 3; ++c) {
            const double t = M[static_cast<std::size_t>(r * 3 + c)].value() * sol.x[static_cast<std::size_t>(c)].value();
            v -= t;
            scale = std::max(scale, std::abs(t));
        }
        res = std::max(res, std::abs(v));
    }
    out.residual = scale > 0.0 ? res / scale : res;
    return out;
}

} // namespace invar3
