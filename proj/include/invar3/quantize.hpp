#pragma once

#include "invar3/connection.hpp"
#include "invar3/expr.hpp"
#include "invar3/jet.hpp"
#include "invar3/symbol.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace invar3 {

// A = a1 dx^3 + 3a2 dx^2 dy + 3a3 dx dy^2 + a4 dy^3 + b1 dx^2 + 2b2 dx dy + b3 dy^2 + c1 dx + c2 dy + a0
template <class T> struct Operator3 {
    std::array<T, 10> c{};

    static constexpr std::array<const char*, 10> kNames = {"a1", "a2", "a3", "a4", "b1", "b2", "b3", "c1", "c2", "a0"};

    T& operator[](std::size_t n) { return c[n]; }
    const T& operator[](std::size_t n) const { return c[n]; }
    Symbol3<T> principal() const { return {c[0], c[1], c[2], c[3]}; }
};

// Multi-index (i, j) of dx^i dy^j with i + j <= 3, stored in graded order.
inline constexpr std::size_t raw_index(int i, int j) { return Jet2::index(i, j); }

// Raw coefficients: A = sum raw(i,j) dx^i dy^j.
struct FormalOperator {
    std::array<Jet2, 10> raw{};
    const Jet2& operator()(int i, int j) const { return raw[raw_index(i, j)]; }
    Jet2& operator()(int i, int j) { return raw[raw_index(i, j)]; }
    int order() const;
};

FormalOperator to_formal(const Operator3<Jet2>& a);
Operator3<Jet2> to_named(const FormalOperator& f);
FormalOperator operator+(const FormalOperator& a, const FormalOperator& b);
FormalOperator operator-(const FormalOperator& a, const FormalOperator& b);

// Total symbol: sigma2 = a11 dx^2 + 2 a12 dx dy + a22 dy^2 stored as (a11, a12, a22).
struct TotalSymbol {
    Symbol3<Jet2> s3;
    std::array<Jet2, 3> s2{};
    std::array<Jet2, 2> s1{};
    Jet2 s0;
};

// Polynomial in w whose coefficients are linear in the formal derivatives f_beta.
// Key: (m1, m2, beta1, beta2).
using WPoly = std::map<std::array<int, 4>, Jet2>;

// w1 (d1 + theta1) + w2 (d2 + theta2) - sum Gamma^l_ij w_i w_j d/dw_l
class SymDerivation {
public:
    SymDerivation(AffineConnection g, std::optional<OneForm> theta = std::nullopt);
    WPoly apply(const WPoly& p) const;

private:
    AffineConnection g_;
    std::optional<OneForm> theta_;
};

// The formal function f itself: one term with coefficient 1.
WPoly formal_function();

// (1/k!) <sigma, (d^s)^k f>; raw[j] is the coefficient of dx^{k-j} dy^j in sigma.
FormalOperator quantize_raw(const std::vector<Jet2>& raw, const AffineConnection& g,
                            const std::optional<OneForm>& theta = std::nullopt);
FormalOperator quantize(const Symbol3<Jet2>& s, const AffineConnection& g,
                        const std::optional<OneForm>& theta = std::nullopt);
FormalOperator quantize2(const std::array<Jet2, 3>& s, const AffineConnection& g,
                         const std::optional<OneForm>& theta = std::nullopt);
FormalOperator quantize1(const std::array<Jet2, 2>& s, const AffineConnection& g,
                         const std::optional<OneForm>& theta = std::nullopt);
FormalOperator quantize0(const Jet2& s, const AffineConnection& g, const std::optional<OneForm>& theta = std::nullopt);
FormalOperator quantize_total(const TotalSymbol& t, const AffineConnection& g,
                              const std::optional<OneForm>& theta = std::nullopt);

enum class ConnectionChoice { Chern, Wagner };
std::string to_string(ConnectionChoice c);

struct SplitResult {
    TotalSymbol sigma;
    AffineConnection gamma;
};

SplitResult split(const Operator3<Jet2>& a, ConnectionChoice choice, const std::optional<OneForm>& theta = std::nullopt,
                  double eps = kDefaultSingularEps);

// Order-2 part of A - quantize(sigma_3, Chern, theta), as (a11, a12, a22).
std::array<Jet2, 3> subsymbol(const Operator3<Jet2>& a, const std::optional<OneForm>& theta,
                              double eps = kDefaultSingularEps);

// Applies A to a function given by its jet: sum raw(i,j) d^{i+j} f / dx^i dy^j.
Jet2 apply_operator(const Operator3<Jet2>& a, const Jet2& f);
double box3(const Operator3<Jet2>& a, const Jet2& f);

struct LineBundleConnection {
    OneForm theta;
    Jet2 lambda;
    double residual = 0.0;
    double cond1 = 0.0;
};

// Solves subsymbol(A, theta) = lambda g_{-1/3}(sigma_3) for (theta, lambda).
LineBundleConnection line_bundle_connection(const Operator3<Jet2>& a, double eps = kDefaultSingularEps);

} // namespace invar3
