#include "invar3/transform.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace invar3;
using namespace testsupport;

TEST_CASE("inverse jets compose to the identity")
{
    Rng rng(40);
    for (int t = 0; t < 20; ++t) {
        const Diffeo phi = random_diffeo(rng);
        const Point q = random_point(rng, 0.6);
        const MapJets psi = inverse_jets(phi, q, 6, q);
        const Point x0{psi.u.value(), psi.v.value()};
        const MapJets f = map_jets(phi, x0, 6);
        CHECK(jet_diff(compose(f.u, psi.u, psi.v), Jet2::var_x(q.x, 6)) < 1e-11);
        CHECK(jet_diff(compose(f.v, psi.u, psi.v), Jet2::var_y(q.y, 6)) < 1e-11);
    }
}

TEST_CASE("pushforward satisfies (phi_* A)(g) = A(g o phi) o phi^-1")
{
    Rng rng(41);
    for (int t = 0; t < 20; ++t) {
        const Diffeo phi = random_diffeo(rng);
        const OperatorField a = operator_field(random_operator_field(rng));
        const Expr g = random_smooth(rng, 2);
        const Point q = random_point(rng, 0.6);
        const Operator3<Jet2> b = pushforward_at(a, phi, q, 2);
        const Point x0 = inverse_point(phi, q, q);
        const MapJets f = map_jets(phi, x0, 5);
        const Jet2 gphi = compose(g.eval_jet(q, 5), f.u, f.v);
        const Jet2 lhs = apply_operator(b, g.eval_jet(q, 5));
        const Jet2 rhs = apply_operator(a(x0, 2), gphi);
        CHECK(rel_err(lhs.value(), rhs.value()) < 1e-11);
        CHECK(b[0].order() == 2);
    }
}

TEST_CASE("pushforward by the identity and by a linear map")
{
    Rng rng(42);
    const OperatorField a = operator_field(random_operator_field(rng));
    const Point p{0.2, -0.1};
    const Operator3<Jet2> same = pushforward_at(a, Diffeo{Expr::x(), Expr::y()}, p, 3);
    const Operator3<Jet2> orig = a(p, 3);
    for (std::size_t n = 0; n < 10; ++n)
        CHECK(jet_diff(same[n], orig[n]) < 1e-13);

    const Mat2 L{{{1.2, 0.3}, {-0.4, 0.9}}};
    const Diffeo lin{num(L[0][0]) * Expr::x() + num(L[0][1]) * Expr::y(),
                     num(L[1][0]) * Expr::x() + num(L[1][1]) * Expr::y()};
    const Point q = lin.apply(p);
    const Operator3<Jet2> b = pushforward_at(a, lin, q, 1);
    const Symbol3<double> expect = push_symbol(values(orig.principal()), L);
    CHECK(b[0].value() == doctest::Approx(expect.a1).epsilon(1e-12));
    CHECK(b[1].value() == doctest::Approx(expect.a2).epsilon(1e-12));
    CHECK(b[2].value() == doctest::Approx(expect.a3).epsilon(1e-12));
    CHECK(b[3].value() == doctest::Approx(expect.a4).epsilon(1e-12));
}

TEST_CASE("gauge action is conjugation by multiplication")
{
    Rng rng(43);
    for (int t = 0; t < 20; ++t) {
        const OperatorField a = operator_field(random_operator_field(rng));
        const Expr h = random_positive(rng);
        const Expr f = random_smooth(rng, 2);
        const Point p = random_point(rng);
        const Operator3<Jet2> b = gauge(a, h)(p, 2);
        const Jet2 hj = h.eval_jet(p, 5);
        const double lhs = box3(b, f.eval_jet(p, 5));
        const double rhs = hj.value() * box3(a(p, 2), f.eval_jet(p, 5) / hj);
        CHECK(rel_err(lhs, rhs) < 1e-12);
        // the principal symbol is gauge invariant
        for (std::size_t n = 0; n < 4; ++n)
            CHECK(rel_err(b[n].value(), a(p, 0)[n].value()) < 1e-13);
    }
}
