#include "invar3/jet.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>
#include <vector>

namespace invar3 {

namespace {

double factorial(int n)
{
    double r = 1.0;
    for (int k = 2; k <= n; ++k)
        r *= k;
    return r;
}

void check_order(int order)
{
    if (order < 0 || order > Jet2::kMaxOrder)
        throw JetOrderError("jet order " + std::to_string(order) + " outside [0, " +
                            std::to_string(Jet2::kMaxOrder) + "]");
}

// sum_n a[n] (u - u0)^n, truncated at the order of u.
Jet2 apply_series(const Jet2& u, const std::vector<double>& a)
{
    Jet2 delta = u;
    delta[0] = 0.0;
    const int K = u.order();
    Jet2 r = Jet2::constant(a[static_cast<std::size_t>(K)], K);
    for (int n = K - 1; n >= 0; --n) {
        r *= delta;
        r[0] += a[static_cast<std::size_t>(n)];
    }
    return r;
}

// Generalized binomial coefficient binom(r, n).
double binom_real(double r, int n)
{
    double b = 1.0;
    for (int k = 0; k < n; ++k)
        b *= (r - k) / (k + 1);
    return b;
}

} // namespace

Jet2::Jet2(int order) : order_(order) { check_order(order); }

Jet2 Jet2::constant(double v, int order)
{
    Jet2 j(order);
    j.c_[0] = v;
    return j;
}

Jet2 Jet2::var_x(double x0, int order)
{
    Jet2 j = constant(x0, order);
    if (order >= 1)
        j.c(1, 0) = 1.0;
    return j;
}

Jet2 Jet2::var_y(double y0, int order)
{
    Jet2 j = constant(y0, order);
    if (order >= 1)
        j.c(0, 1) = 1.0;
    return j;
}

double Jet2::partial(int i, int j) const
{
    if (i < 0 || j < 0 || i + j > order_)
        throw JetOrderError("partial (" + std::to_string(i) + "," + std::to_string(j) +
                            ") exceeds jet order " + std::to_string(order_));
    return c(i, j) * factorial(i) * factorial(j);
}

Jet2 Jet2::truncated(int order) const
{
    if (order > order_)
        throw JetOrderError("cannot raise jet order by truncation");
    Jet2 r(order);
    std::copy_n(c_.begin(), size_for(order), r.c_.begin());
    return r;
}

Jet2 Jet2::dx() const
{
    if (order_ == 0)
        throw JetOrderError("derivative of a 0-jet");
    Jet2 r(order_ - 1);
    for (int d = 0; d <= order_ - 1; ++d)
        for (int j = 0; j <= d; ++j) {
            const int i = d - j;
            r.c(i, j) = (i + 1) * c(i + 1, j);
        }
    return r;
}

Jet2 Jet2::dy() const
{
    if (order_ == 0)
        throw JetOrderError("derivative of a 0-jet");
    Jet2 r(order_ - 1);
    for (int d = 0; d <= order_ - 1; ++d)
        for (int j = 0; j <= d; ++j) {
            const int i = d - j;
            r.c(i, j) = (j + 1) * c(i, j + 1);
        }
    return r;
}

double Jet2::max_abs() const
{
    double m = 0.0;
    for (std::size_t k = 0; k < size(); ++k)
        m = std::max(m, std::abs(c_[k]));
    return m;
}

bool Jet2::finite() const
{
    for (std::size_t k = 0; k < size(); ++k)
        if (!std::isfinite(c_[k]))
            return false;
    return true;
}

Jet2& Jet2::operator+=(const Jet2& o)
{
    order_ = std::min(order_, o.order_);
    for (std::size_t k = 0; k < size(); ++k)
        c_[k] += o.c_[k];
    for (std::size_t k = size(); k < kCapacity; ++k)
        c_[k] = 0.0;
    return *this;
}

Jet2& Jet2::operator-=(const Jet2& o)
{
    order_ = std::min(order_, o.order_);
    for (std::size_t k = 0; k < size(); ++k)
        c_[k] -= o.c_[k];
    for (std::size_t k = size(); k < kCapacity; ++k)
        c_[k] = 0.0;
    return *this;
}

Jet2& Jet2::operator*=(const Jet2& o)
{
    const int K = std::min(order_, o.order_);
    std::array<double, kCapacity> r{};
    const double* b = o.c_.data();
    // for fixed (d1, j1, d2) the targets r[idx(d1 + d2, j1 + j2)] and sources b[idx(d2, j2)] are contiguous in j2
    for (int d1 = 0; d1 <= K; ++d1)
        for (int j1 = 0; j1 <= d1; ++j1) {
            const double a = c_[index(d1 - j1, j1)];
            if (a == 0.0)
                continue;
            for (int d2 = 0; d2 <= K - d1; ++d2) {
                double* dst = r.data() + index(d1 + d2 - j1, j1);
                const double* src = b + index(d2, 0);
                for (int j2 = 0; j2 <= d2; ++j2)
                    dst[j2] += a * src[j2];
            }
        }
    c_ = r;
    order_ = K;
    return *this;
}

Jet2& Jet2::operator/=(const Jet2& o)
{
    const double b0 = o.c_[0];
    if (b0 == 0.0 || !std::isfinite(b0))
        throw DomainError("division by a jet with zero constant term");
    const int K = std::min(order_, o.order_);
    Jet2 q(K);
    for (int d = 0; d <= K; ++d)
        for (int j = 0; j <= d; ++j) {
            const int i = d - j;
            double s = c(i, j);
            for (int k = 0; k <= i; ++k)
                for (int l = 0; l <= j; ++l) {
                    if (k == 0 && l == 0)
                        continue;
                    s -= o.c(k, l) * q.c(i - k, j - l);
                }
            q.c(i, j) = s / b0;
        }
    *this = q;
    return *this;
}

Jet2& Jet2::operator+=(double s)
{
    c_[0] += s;
    return *this;
}

Jet2& Jet2::operator-=(double s)
{
    c_[0] -= s;
    return *this;
}

Jet2& Jet2::operator*=(double s)
{
    for (std::size_t k = 0; k < size(); ++k)
        c_[k] *= s;
    return *this;
}

Jet2& Jet2::operator/=(double s)
{
    if (s == 0.0)
        throw DomainError("division by zero");
    for (std::size_t k = 0; k < size(); ++k)
        c_[k] /= s;
    return *this;
}

Jet2 operator-(const Jet2& a)
{
    Jet2 r = a;
    r *= -1.0;
    return r;
}

Jet2 operator+(const Jet2& a, const Jet2& b)
{
    Jet2 r = a;
    r += b;
    return r;
}

Jet2 operator-(const Jet2& a, const Jet2& b)
{
    Jet2 r = a;
    r -= b;
    return r;
}

Jet2 operator*(const Jet2& a, const Jet2& b)
{
    Jet2 r = a;
    r *= b;
    return r;
}

Jet2 operator/(const Jet2& a, const Jet2& b)
{
    Jet2 r = a;
    r /= b;
    return r;
}

Jet2 operator+(const Jet2& a, double s)
{
    Jet2 r = a;
    r += s;
    return r;
}

Jet2 operator+(double s, const Jet2& a) { return a + s; }

Jet2 operator-(const Jet2& a, double s)
{
    Jet2 r = a;
    r -= s;
    return r;
}

Jet2 operator-(double s, const Jet2& a)
{
    Jet2 r = -a;
    r += s;
    return r;
}

Jet2 operator*(const Jet2& a, double s)
{
    Jet2 r = a;
    r *= s;
    return r;
}

Jet2 operator*(double s, const Jet2& a) { return a * s; }

Jet2 operator/(const Jet2& a, double s)
{
    Jet2 r = a;
    r /= s;
    return r;
}

Jet2 operator/(double s, const Jet2& a) { return Jet2::constant(s, a.order()) / a; }

Jet2 exp(const Jet2& u)
{
    const double e0 = std::exp(u.value());
    std::vector<double> a(static_cast<std::size_t>(u.order()) + 1);
    for (int n = 0; n <= u.order(); ++n)
        a[static_cast<std::size_t>(n)] = e0 / factorial(n);
    return apply_series(u, a);
}

Jet2 log(const Jet2& u)
{
    const double u0 = u.value();
    if (!(u0 > 0.0))
        throw DomainError("ln of non-positive value " + std::to_string(u0));
    std::vector<double> a(static_cast<std::size_t>(u.order()) + 1);
    a[0] = std::log(u0);
    double p = 1.0;
    for (int n = 1; n <= u.order(); ++n) {
        p *= u0;
        a[static_cast<std::size_t>(n)] = ((n % 2 == 1) ? 1.0 : -1.0) / (n * p);
    }
    return apply_series(u, a);
}

Jet2 sin(const Jet2& u)
{
    const double u0 = u.value();
    std::vector<double> a(static_cast<std::size_t>(u.order()) + 1);
    const double s = std::sin(u0), c = std::cos(u0);
    const double cyc[4] = {s, c, -s, -c};
    for (int n = 0; n <= u.order(); ++n)
        a[static_cast<std::size_t>(n)] = cyc[n % 4] / factorial(n);
    return apply_series(u, a);
}

Jet2 cos(const Jet2& u)
{
    const double u0 = u.value();
    std::vector<double> a(static_cast<std::size_t>(u.order()) + 1);
    const double s = std::sin(u0), c = std::cos(u0);
    const double cyc[4] = {c, -s, -c, s};
    for (int n = 0; n <= u.order(); ++n)
        a[static_cast<std::size_t>(n)] = cyc[n % 4] / factorial(n);
    return apply_series(u, a);
}

Jet2 rpow(const Jet2& u, double r)
{
    const double u0 = u.value();
    if (r == std::floor(r) && std::abs(r) <= 64.0)
        return ipow(u, static_cast<int>(r));
    if (!(u0 > 0.0)) {
        if (u0 == 0.0 && u.order() == 0 && r > 0.0)
            return Jet2::constant(0.0, 0);
        throw DomainError("real power of non-positive value " + std::to_string(u0));
    }
    std::vector<double> a(static_cast<std::size_t>(u.order()) + 1);
    const double base = std::pow(u0, r);
    double p = 1.0;
    for (int n = 0; n <= u.order(); ++n) {
        a[static_cast<std::size_t>(n)] = base * binom_real(r, n) / p;
        p *= u0;
    }
    return apply_series(u, a);
}

Jet2 sqrt(const Jet2& u)
{
    const double u0 = u.value();
    if (u0 < 0.0)
        throw DomainError("sqrt of negative value " + std::to_string(u0));
    if (u0 == 0.0) {
        if (u.order() == 0)
            return Jet2::constant(0.0, 0);
        throw DomainError("sqrt is not differentiable at 0");
    }
    return rpow(u, 0.5);
}

Jet2 cbrt(const Jet2& u)
{
    const double u0 = u.value();
    if (u0 == 0.0) {
        if (u.order() == 0)
            return Jet2::constant(0.0, 0);
        throw DomainError("cbrt is not differentiable at 0");
    }
    std::vector<double> a(static_cast<std::size_t>(u.order()) + 1);
    const double base = std::cbrt(u0);
    double p = 1.0;
    for (int n = 0; n <= u.order(); ++n) {
        a[static_cast<std::size_t>(n)] = base * binom_real(1.0 / 3.0, n) / p;
        p *= u0;
    }
    return apply_series(u, a);
}

Jet2 ipow(const Jet2& u, int n)
{
    if (n < 0)
        return 1.0 / ipow(u, -n);
    Jet2 r = Jet2::constant(1.0, u.order());
    Jet2 b = u;
    while (n > 0) {
        if (n & 1)
            r *= b;
        n >>= 1;
        if (n > 0)
            b *= b;
    }
    return r;
}

Jet2 compose(const Jet2& f, const Jet2& phi_x, const Jet2& phi_y)
{
    const int K = f.order();
    if (K > phi_x.order() || K > phi_y.order())
        throw JetOrderError("compose: order(f) = " + std::to_string(K) +
                            " exceeds order of the substituted jets");
    Jet2 dx = phi_x.truncated(K);
    Jet2 dy = phi_y.truncated(K);
    dx[0] = 0.0;
    dy[0] = 0.0;
    std::vector<Jet2> px(static_cast<std::size_t>(K) + 1), py(static_cast<std::size_t>(K) + 1);
    px[0] = Jet2::constant(1.0, K);
    py[0] = Jet2::constant(1.0, K);
    for (int n = 1; n <= K; ++n) {
        px[static_cast<std::size_t>(n)] = px[static_cast<std::size_t>(n) - 1] * dx;
        py[static_cast<std::size_t>(n)] = py[static_cast<std::size_t>(n) - 1] * dy;
    }
    // sum_i dx^i (sum_j c_ij dy^j): one jet product per power of dx
    Jet2 r(K);
    for (int i = 0; i <= K; ++i) {
        Jet2 inner(K);
        bool any = false;
        for (int j = 0; i + j <= K; ++j) {
            const double cij = f.c(i, j);
            if (cij == 0.0)
                continue;
            any = true;
            const Jet2& p = py[static_cast<std::size_t>(j)];
            for (std::size_t k = 0; k < p.size(); ++k)
                inner[k] += cij * p[k];
        }
        if (any)
            r += px[static_cast<std::size_t>(i)] * inner;
    }
    return r;
}

std::string to_string(const Jet2& j)
{
    std::ostringstream os;
    os.precision(17);
    os << "Jet2(order=" << j.order() << "; ";
    for (int d = 0; d <= j.order(); ++d)
        for (int k = 0; k <= d; ++k)
            os << "c" << d - k << k << "=" << j.c(d - k, k) << (d == j.order() && k == d ? ")" : ", ");
    return os.str();
}

} // namespace invar3
