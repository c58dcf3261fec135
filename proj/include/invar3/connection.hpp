#pragma once

#include "invar3/expr.hpp"
#include "invar3/jet.hpp"
#include "invar3/symbol.hpp"

#include <array>
#include <vector>

namespace invar3 {

// Gamma^k_ij with 0-based indices; j is the differentiation direction:
// nabla_{d_j} d_i = Gamma^k_ij d_k.
struct AffineConnection {
    std::array<Jet2, 8> gamma{};
    double cond1 = 0.0;

    Jet2& operator()(int k, int i, int j) { return gamma[static_cast<std::size_t>(k * 4 + i * 2 + j)]; }
    const Jet2& operator()(int k, int i, int j) const { return gamma[static_cast<std::size_t>(k * 4 + i * 2 + j)]; }
    int order() const;
    bool symmetric() const;
};

struct OneForm {
    std::array<Jet2, 2> c{};
    const Jet2& operator[](int l) const { return c[static_cast<std::size_t>(l)]; }
    Jet2& operator[](int l) { return c[static_cast<std::size_t>(l)]; }
};

struct TwoForm {
    Jet2 r; // coefficient of dx ^ dy
};

// T(d1, d2) = T^1 d1 + T^2 d2.
struct TorsionTensor {
    std::array<Jet2, 2> t{};
};

struct ChernResult {
    AffineConnection gamma;
    OneForm omega;
};

// Symmetric 3-tensor index triples in component order.
inline constexpr std::array<std::array<int, 3>, 4> kSym3Index = {{{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {1, 1, 1}}};

// Value matrices of the defining linear systems (row = (l, component), l-major).
std::vector<double> wagner_system(const Symbol3<double>& s);
std::vector<double> chern_system(const Symbol3<double>& s);

// The 8 components of d_nabla sigma, ordered (l, component).
std::array<Jet2, 8> covariant_derivative_sym3(const AffineConnection& g, const Symbol3<Jet2>& s);

AffineConnection wagner_connection(const Symbol3<Jet2>& s, double eps = kDefaultSingularEps);
ChernResult chern_connection(const Symbol3<Jet2>& s, double eps = kDefaultSingularEps);

TorsionTensor torsion(const AffineConnection& g);
// theta = (-T^2, T^1); for the Wagner connection omega_Chern = -3 theta.
OneForm torsion_form(const AffineConnection& g);
// R[m][i]: coefficient of dx ^ dy in the curvature endomorphism d_i -> d_m.
std::array<std::array<Jet2, 2>, 2> curvature(const AffineConnection& g);
TwoForm exterior_derivative(const OneForm& a);
// (nabla_l T)^k as [l][k].
std::array<std::array<Jet2, 2>, 2> torsion_derivative(const AffineConnection& g);

enum class GroupType { ConstantType, SolvableType, Generic };
std::string to_string(GroupType t);

struct GroupTypeReport {
    GroupType type = GroupType::Generic;
    double max_torsion = 0.0;
    double max_torsion_derivative = 0.0;
};

GroupTypeReport group_type_test(const Symbol3<Expr>& field, const std::vector<Point>& samples, double tol = 1e-8,
                                double eps = kDefaultSingularEps);

Symbol3<Jet2> eval_symbol(const Symbol3<Expr>& field, Point p, int order);

} // namespace invar3
