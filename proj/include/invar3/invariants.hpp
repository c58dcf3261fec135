#pragma once

#include "invar3/connection.hpp"
#include "invar3/quantize.hpp"
#include "invar3/symbol.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace invar3 {

struct RegularityError : std::runtime_error {
    RegularityError(std::string condition, const std::string& what);
    std::string condition;
};

struct RegularityConfig {
    double eps = 1e-9;
};

using Vector2 = std::array<Jet2, 2>;

struct Coframe {
    OneForm theta;
    OneForm theta_p;
    Vector2 delta1;
    Vector2 delta2;
    int orientation = 1;
    Sym2Form<Jet2> metric; // contravariant form used to measure covectors
    double regularity = 0.0;
};

// Builds an oriented coframe from theta and a contravariant metric on covectors.
Coframe orthogonal_coframe(const OneForm& theta, const Sym2Form<Jet2>& metric, double regularity);
// Coframe with given rows; duals by inversion. Test-only overrides go through here.
Coframe coframe_from_rows(const OneForm& theta, const OneForm& theta_p);

Coframe symbol_coframe(const Symbol3<Jet2>& s, const RegularityConfig& cfg = {});
Coframe conformal_coframe(const Symbol3<Jet2>& s, const RegularityConfig& cfg = {});

// theta with d_nabla Omega = Omega (x) theta for the Chern connection; needs only Omega != 0.
struct ConformalTheta {
    OneForm theta;
    Jet2 omega_density; // d omega = omega_density dx ^ dy
};
ConformalTheta conformal_theta(const Symbol3<Jet2>& s, const RegularityConfig& cfg = {});

struct ConformalDetail {
    Coframe frame;
    Jet2 omega_density;   // d omega = omega_density dx ^ dy
    std::array<Jet2, 4> nabla_theta; // (nabla theta)_{il} in order 11, 12, 21, 22
};
ConformalDetail conformal_detail(const Symbol3<Jet2>& s, const RegularityConfig& cfg = {});

// sigma(Theta^a, Theta^b, Theta^c) for the coframe rows.
std::array<Jet2, 4> decompose3(const Symbol3<Jet2>& s, const Coframe& f);
std::array<Jet2, 3> decompose2(const std::array<Jet2, 3>& s, const Coframe& f);
std::array<Jet2, 2> decompose1(const std::array<Jet2, 2>& s, const Coframe& f);
Symbol3<Jet2> recompose3(const std::array<Jet2, 4>& inv, const Coframe& f);

std::array<Jet2, 4> basic_invariants(const Symbol3<Jet2>& s, const RegularityConfig& cfg = {});

struct ProjectiveClass {
    std::array<double, 4> ratios{};
    int pivot = 0;
};
ProjectiveClass projective_class(const std::array<double, 4>& v);

std::array<Jet2, 4> conformal_components(const Symbol3<Jet2>& s, const RegularityConfig& cfg = {});
ProjectiveClass conformal_invariants(const Symbol3<Jet2>& s, const RegularityConfig& cfg = {});

// Derivatives of an invariant field along the frame: (delta_1 I, delta_2 I).
std::array<Jet2, 2> tresse_derivative(const Jet2& invariant, const Coframe& f);

enum class OperatorMode { Scalar, Bundle };

struct OperatorInvariants {
    std::array<Jet2, 4> i3;
    std::array<Jet2, 3> i2;
    std::array<Jet2, 2> i1;
    Jet2 i0;
    std::optional<Jet2> k;
    Coframe frame;

    std::vector<Jet2> all() const;
    static std::vector<std::string> names(OperatorMode mode);
};

OperatorInvariants operator_invariants(const Operator3<Jet2>& a, OperatorMode mode, const RegularityConfig& cfg = {});

} // namespace invar3
