#include "invar3/symbol.hpp"

namespace invar3 {

std::string to_string(SymbolType t)
{
    switch (t) {
    case SymbolType::Hyperbolic:
        return "hyperbolic";
    case SymbolType::Ultrahyperbolic:
        return "ultrahyperbolic";
    case SymbolType::Singular:
        return "singular";
    }
    return "singular";
}

Classification classify(const Symbol3<double>& s, double eps)
{
    Classification c;
    c.eps = eps;
    c.delta = discriminant(s);
    const double m = std::max({std::abs(s.a1), std::abs(s.a2), std::abs(s.a3), std::abs(s.a4)});
    if (m == 0.0 || !std::isfinite(m)) {
        c.normalized_delta = 0.0;
        c.type = SymbolType::Singular;
        return c;
    }
    c.normalized_delta = c.delta / (m * m * m * m);
    if (c.normalized_delta > eps)
        c.type = SymbolType::Hyperbolic;
    else if (c.normalized_delta < -eps)
        c.type = SymbolType::Ultrahyperbolic;
    else
        c.type = SymbolType::Singular;
    return c;
}

Mat2 inverse(const Mat2& m)
{
    const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if (det == 0.0)
        throw SingularSymbol("singular 2x2 matrix");
    return {{{m[1][1] / det, -m[0][1] / det}, {-m[1][0] / det, m[0][0] / det}}};
}

} // namespace invar3
