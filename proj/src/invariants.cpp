#include "invar3/invariants.hpp"

#include <algorithm>
#include <cmath>

namespace invar3 {

namespace {

double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }

double symbol_norm(const Symbol3<Jet2>& s)
{
    double m = 0.0;
    for (int n = 0; n < 4; ++n)
        m = std::max(m, std::abs(s.comp(n).value()));
    return m;
}

// Largest raw partial of total degree d over the four components.
double partial_norm(const Symbol3<Jet2>& s, int d)
{
    double m = 0.0;
    for (int n = 0; n < 4; ++n) {
        if (s.comp(n).order() < d)
            continue;
        for (int j = 0; j <= d; ++j)
            m = std::max(m, std::abs(s.comp(n).partial(d - j, j)));
    }
    return m;
}

double form_norm(const Sym2Form<Jet2>& g)
{
    return std::max({std::abs(g.g11.value()), std::abs(0.5 * g.g12.value()), std::abs(g.g22.value())});
}

double covector_norm2(const OneForm& t) { return t[0].value() * t[0].value() + t[1].value() * t[1].value(); }

Jet2 eval3(const Symbol3<Jet2>& s, const OneForm& u, const OneForm& v, const OneForm& w)
{
    Jet2 acc = 0.0 * s.a1 * u[0];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                acc += s(i, j, k) * u[i] * v[j] * w[k];
    return acc;
}

std::array<Jet2, 2> as_array(const OneForm& t) { return {t[0], t[1]}; }

} // namespace

RegularityError::RegularityError(std::string c, const std::string& what)
    : std::runtime_error(what), condition(std::move(c))
{
}

Coframe coframe_from_rows(const OneForm& theta, const OneForm& theta_p)
{
    Coframe f;
    f.theta = theta;
    f.theta_p = theta_p;
    const Jet2 det = theta[0] * theta_p[1] - theta[1] * theta_p[0];
    if (det.value() == 0.0)
        throw RegularityError("coframe-degenerate", "coframe rows are linearly dependent");
    f.delta1 = {theta_p[1] / det, -1.0 * theta_p[0] / det};
    f.delta2 = {-1.0 * theta[1] / det, theta[0] / det};
    f.orientation = det.value() > 0.0 ? 1 : -1;
    return f;
}

Coframe orthogonal_coframe(const OneForm& theta, const Sym2Form<Jet2>& metric, double regularity)
{
    const Jet2 m11 = metric.g11, m12 = 0.5 * metric.g12, m22 = metric.g22;
    const Jet2 u1 = m11 * theta[0] + m12 * theta[1];
    const Jet2 u2 = m12 * theta[0] + m22 * theta[1];
    const Jet2 det = form_det(metric);
    const Jet2 root = sqrt(sign_of(det.value()) * det);
    const Jet2 c = theta[0] * u1 + theta[1] * u2;
    const double s = sign_of(c.value());
    OneForm tp;
    tp[0] = (-s) * u2 / root;
    tp[1] = s * u1 / root;
    Coframe f = coframe_from_rows(theta, tp);
    f.metric = metric;
    f.regularity = regularity;
    return f;
}

Coframe symbol_coframe(const Symbol3<Jet2>& s, const RegularityConfig& cfg)
{
    const AffineConnection g = wagner_connection(s);
    const OneForm theta = torsion_form(g);
    const double n = symbol_norm(s);
    const double scale = 1.0 + partial_norm(s, 1) / n;
    if (std::sqrt(covector_norm2(theta)) <= cfg.eps * scale)
        throw RegularityError("theta-zero", "symbol is not 1-regular: torsion form vanishes");
    const Sym2Form<Jet2> m = g_k(s, -1.0 / 3.0);
    const Jet2 c = apply(m, as_array(theta), as_array(theta));
    if (std::abs(c.value()) <= cfg.eps * form_norm(m) * covector_norm2(theta))
        throw RegularityError("theta-null", "symbol is not 1-regular: torsion form is null for the Wagner metric");
    return orthogonal_coframe(theta, m, c.value());
}

ConformalTheta conformal_theta(const Symbol3<Jet2>& s, const RegularityConfig& cfg)
{
    const ChernResult ch = chern_connection(s);
    const AffineConnection& g = ch.gamma;
    ConformalTheta out;
    out.omega_density = exterior_derivative(ch.omega).r;
    const Jet2& om = out.omega_density;
    const double n = symbol_norm(s);
    const double d1 = partial_norm(s, 1) / n;
    const double d2 = partial_norm(s, 2) / n;
    if (std::abs(om.value()) <= cfg.eps * (1.0 + d1 * d1 + d2))
        throw RegularityError("omega-zero", "conformal class is not regular: curvature form vanishes");
    for (int l = 0; l < 2; ++l)
        out.theta[l] = om.d(l) / om - (g(0, 0, l) + g(1, 1, l));
    return out;
}

ConformalDetail conformal_detail(const Symbol3<Jet2>& s, const RegularityConfig& cfg)
{
    const AffineConnection g = chern_connection(s).gamma;
    const ConformalTheta ct = conformal_theta(s, cfg);
    const OneForm& theta = ct.theta;
    ConformalDetail out;
    out.omega_density = ct.omega_density;

    for (int i = 0; i < 2; ++i)
        for (int l = 0; l < 2; ++l) {
            Jet2 v = theta[i].d(l);
            for (int m = 0; m < 2; ++m)
                v -= g(m, i, l) * theta[m];
            out.nabla_theta[static_cast<std::size_t>(i * 2 + l)] = v;
        }
    const auto& nt = out.nabla_theta;
    const Sym2Form<Jet2> G{nt[0], nt[1] + nt[2], nt[3], Variance::Covariant};
    const double gn = form_norm(G);
    if (std::abs(form_det(G).value()) <= cfg.eps * gn * gn)
        throw RegularityError("G-degenerate", "conformal class is not regular: G is degenerate");
    const Sym2Form<Jet2> m = inverse(G);
    const Jet2 c = apply(m, as_array(theta), as_array(theta));
    if (std::abs(c.value()) <= cfg.eps * form_norm(m) * covector_norm2(theta))
        throw RegularityError("theta-null", "conformal class is not regular: G^{-1}(theta, theta) vanishes");
    out.frame = orthogonal_coframe(theta, m, c.value());
    return out;
}

Coframe conformal_coframe(const Symbol3<Jet2>& s, const RegularityConfig& cfg) { return conformal_detail(s, cfg).frame; }

std::array<Jet2, 4> decompose3(const Symbol3<Jet2>& s, const Coframe& f)
{
    const OneForm& a = f.theta;
    const OneForm& b = f.theta_p;
    return {eval3(s, a, a, a), eval3(s, a, a, b), eval3(s, a, b, b), eval3(s, b, b, b)};
}

std::array<Jet2, 3> decompose2(const std::array<Jet2, 3>& s, const Coframe& f)
{
    const Sym2Form<Jet2> q{s[0], 2.0 * s[1], s[2], Variance::Contravariant};
    const auto a = as_array(f.theta), b = as_array(f.theta_p);
    return {apply(q, a, a), apply(q, a, b), apply(q, b, b)};
}

std::array<Jet2, 2> decompose1(const std::array<Jet2, 2>& s, const Coframe& f)
{
    return {s[0] * f.theta[0] + s[1] * f.theta[1], s[0] * f.theta_p[0] + s[1] * f.theta_p[1]};
}

Symbol3<Jet2> recompose3(const std::array<Jet2, 4>& inv, const Coframe& f)
{
    const std::array<std::array<Jet2, 2>, 2> L{{{f.delta1[0], f.delta2[0]}, {f.delta1[1], f.delta2[1]}}};
    return push_symbol(Symbol3<Jet2>{inv[0], inv[1], inv[2], inv[3]}, L);
}

std::array<Jet2, 4> basic_invariants(const Symbol3<Jet2>& s, const RegularityConfig& cfg)
{
    return decompose3(s, symbol_coframe(s, cfg));
}

ProjectiveClass projective_class(const std::array<double, 4>& v)
{
    ProjectiveClass p;
    for (int j = 1; j < 4; ++j)
        if (std::abs(v[static_cast<std::size_t>(j)]) > std::abs(v[static_cast<std::size_t>(p.pivot)]))
            p.pivot = j;
    const double d = v[static_cast<std::size_t>(p.pivot)];
    if (d == 0.0)
        throw RegularityError("class-zero", "all components vanish");
    for (std::size_t j = 0; j < 4; ++j)
        p.ratios[j] = v[j] / d;
    return p;
}

std::array<Jet2, 4> conformal_components(const Symbol3<Jet2>& s, const RegularityConfig& cfg)
{
    return decompose3(s, conformal_coframe(s, cfg));
}

ProjectiveClass conformal_invariants(const Symbol3<Jet2>& s, const RegularityConfig& cfg)
{
    const auto c = conformal_components(s, cfg);
    return projective_class({c[0].value(), c[1].value(), c[2].value(), c[3].value()});
}

std::array<Jet2, 2> tresse_derivative(const Jet2& invariant, const Coframe& f)
{
    const Jet2 ix = invariant.dx(), iy = invariant.dy();
    return {f.delta1[0] * ix + f.delta1[1] * iy, f.delta2[0] * ix + f.delta2[1] * iy};
}

std::vector<Jet2> OperatorInvariants::all() const
{
    std::vector<Jet2> v(i3.begin(), i3.end());
    v.insert(v.end(), i2.begin(), i2.end());
    v.insert(v.end(), i1.begin(), i1.end());
    v.push_back(i0);
    if (k)
        v.push_back(*k);
    return v;
}

std::vector<std::string> OperatorInvariants::names(OperatorMode mode)
{
    std::vector<std::string> n = {"J3_1", "J3_2", "J3_3", "J3_4", "J2_1", "J2_2", "J2_3", "J1_1", "J1_2", "J0"};
    if (mode == OperatorMode::Bundle)
        n.push_back("K");
    return n;
}

OperatorInvariants operator_invariants(const Operator3<Jet2>& a, OperatorMode mode, const RegularityConfig& cfg)
{
    OperatorInvariants out;
    out.frame = conformal_coframe(a.principal(), cfg);
    SplitResult sp;
    if (mode == OperatorMode::Bundle) {
        const LineBundleConnection lb = line_bundle_connection(a);
        sp = split(a, ConnectionChoice::Chern, lb.theta);
        const Jet2 area = out.frame.theta[0] * out.frame.theta_p[1] - out.frame.theta[1] * out.frame.theta_p[0];
        out.k = exterior_derivative(lb.theta).r / area;
    } else {
        sp = split(a, ConnectionChoice::Chern);
    }
    out.i3 = decompose3(sp.sigma.s3, out.frame);
    out.i2 = decompose2(sp.sigma.s2, out.frame);
    out.i1 = decompose1(sp.sigma.s1, out.frame);
    out.i0 = sp.sigma.s0;
    return out;
}

} // namespace invar3
