#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace invar3 {

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct JetOrderError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Truncated Taylor expansion in two variables. Coefficient c(i,j) is
// d^{i+j}f / dx^i dy^j divided by i! j!. Storage is graded by total degree so
// truncation keeps a prefix.
class Jet2 {
public:
    static constexpr int kMaxOrder = 10;
    static constexpr std::size_t kCapacity = (kMaxOrder + 1) * (kMaxOrder + 2) / 2;

    Jet2() = default;
    explicit Jet2(int order);

    static Jet2 constant(double v, int order);
    static Jet2 var_x(double x0, int order);
    static Jet2 var_y(double y0, int order);

    static constexpr std::size_t index(int i, int j)
    {
        const int d = i + j;
        return static_cast<std::size_t>(d * (d + 1) / 2 + j);
    }
    static constexpr std::size_t size_for(int order)
    {
        return static_cast<std::size_t>((order + 1) * (order + 2) / 2);
    }

    int order() const { return order_; }
    std::size_t size() const { return size_for(order_); }

    double c(int i, int j) const { return c_[index(i, j)]; }
    double& c(int i, int j) { return c_[index(i, j)]; }
    double operator[](std::size_t k) const { return c_[k]; }
    double& operator[](std::size_t k) { return c_[k]; }

    double value() const { return c_[0]; }
    // Raw partial derivative d^{i+j}f / dx^i dy^j at the base point.
    double partial(int i, int j) const;

    Jet2 truncated(int order) const;
    Jet2 dx() const;
    Jet2 dy() const;
    Jet2 d(int direction) const { return direction == 0 ? dx() : dy(); }

    double max_abs() const;
    bool finite() const;

    Jet2& operator+=(const Jet2& o);
    Jet2& operator-=(const Jet2& o);
    Jet2& operator*=(const Jet2& o);
    Jet2& operator/=(const Jet2& o);
    Jet2& operator+=(double s);
    Jet2& operator-=(double s);
    Jet2& operator*=(double s);
    Jet2& operator/=(double s);

private:
    int order_ = 0;
    std::array<double, kCapacity> c_{};
};

Jet2 operator-(const Jet2& a);
Jet2 operator+(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a, const Jet2& b);
Jet2 operator*(const Jet2& a, const Jet2& b);
Jet2 operator/(const Jet2& a, const Jet2& b);
Jet2 operator+(const Jet2& a, double s);
Jet2 operator+(double s, const Jet2& a);
Jet2 operator-(const Jet2& a, double s);
Jet2 operator-(double s, const Jet2& a);
Jet2 operator*(const Jet2& a, double s);
Jet2 operator*(double s, const Jet2& a);
Jet2 operator/(const Jet2& a, double s);
Jet2 operator/(double s, const Jet2& a);

Jet2 exp(const Jet2& u);
Jet2 log(const Jet2& u);
Jet2 sin(const Jet2& u);
Jet2 cos(const Jet2& u);
Jet2 sqrt(const Jet2& u);
Jet2 cbrt(const Jet2& u);
Jet2 ipow(const Jet2& u, int n);
// u^r for real r; requires value(u) > 0 unless r is an integer.
Jet2 rpow(const Jet2& u, double r);

// Expansion of f o phi at p, where f is expanded at (value(phi_x), value(phi_y)).
Jet2 compose(const Jet2& f, const Jet2& phi_x, const Jet2& phi_y);

// Scalar counterparts so algebraic templates accept double and Jet2 alike.
inline double ipow(double u, int n)
{
    double r = 1.0;
    const bool neg = n < 0;
    for (int k = 0; k < (neg ? -n : n); ++k)
        r *= u;
    return neg ? 1.0 / r : r;
}
inline double exp(double u) { return std::exp(u); }
inline double log(double u)
{
    if (!(u > 0.0))
        throw DomainError("ln of non-positive value");
    return std::log(u);
}
inline double sin(double u) { return std::sin(u); }
inline double cos(double u) { return std::cos(u); }
inline double sqrt(double u)
{
    if (u < 0.0)
        throw DomainError("sqrt of negative value");
    return std::sqrt(u);
}
inline double cbrt(double u) { return std::cbrt(u); }
inline double rpow(double u, double r)
{
    if (r == std::floor(r) && std::abs(r) <= 64.0)
        return ipow(u, static_cast<int>(r));
    if (!(u > 0.0))
        throw DomainError("real power of non-positive value");
    return std::pow(u, r);
}
inline double abs_value(double v) { return std::abs(v); }
inline double value_of(double v) { return v; }
inline double value_of(const Jet2& v) { return v.value(); }

template <class T> T make_constant(double v, const T& like);
template <> inline double make_constant<double>(double v, const double&) { return v; }
template <> inline Jet2 make_constant<Jet2>(double v, const Jet2& like) { return Jet2::constant(v, like.order()); }

inline int order_of(const Jet2& j) { return j.order(); }

std::string to_string(const Jet2& j);

} // namespace invar3
