#pragma once

#include "invar3/expr.hpp"
#include "invar3/jet.hpp"
#include "invar3/quantize.hpp"

#include <array>
#include <functional>
#include <optional>

namespace invar3 {

struct NotInvertible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InverseMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ZeroCrossing : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Coefficient field: evaluates all ten coefficients as jets of the given order at a point.
using OperatorField = std::function<Operator3<Jet2>(Point, int)>;

OperatorField operator_field(const Operator3<Expr>& a);

// q = phi(x). Without a supplied inverse, phi^{-1} is found by Newton iteration.
struct Diffeo {
    Expr fx;
    Expr fy;
    std::optional<std::array<Expr, 2>> inverse;

    Point apply(Point x) const { return {fx.eval(x), fy.eval(x)}; }
};

struct MapJets {
    Jet2 u;
    Jet2 v;
};

MapJets map_jets(const Diffeo& phi, Point x, int order);
// Solves phi(x) = q by damped Newton from the guess.
Point inverse_point(const Diffeo& phi, Point q, Point guess);
// Jets of phi^{-1} at q.
MapJets inverse_jets(const Diffeo& phi, Point q, int order, Point guess);

// Max residual of phi^{-1}(phi(x)) - x over an n x n sample of the window; throws InverseMismatch above tol.
double check_inverse(const Diffeo& phi, Point lo, Point hi, int n = 9, double tol = 1e-10);

// (phi_* A)(g) = A(g o phi) o phi^{-1}, evaluated at q.
Operator3<Jet2> pushforward_at(const OperatorField& a, const Diffeo& phi, Point q, int order);
Operator3<Jet2> pushforward_at(const OperatorField& a, const Diffeo& phi, Point q, int order, Point guess);
OperatorField pushforward(OperatorField a, Diffeo phi);

// f -> h A(f / h). Throws ZeroCrossing where |h| < floor.
OperatorField gauge(OperatorField a, Expr h, double floor = 1e-12);
// Min |h| over an n x n sample of the window; throws ZeroCrossing below floor.
double check_gauge(const Expr& h, Point lo, Point hi, int n = 9, double floor = 1e-12);
OperatorField scaled(OperatorField a, Expr f);
OperatorField negated(OperatorField a);

Operator3<Jet2> scale(const Operator3<Jet2>& a, const Jet2& f);

} // namespace invar3
