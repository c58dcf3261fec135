#!/usr/bin/env python3
"""Writes the CLI fixture operators. Derived operators are computed symbolically."""
import json
import sys
from pathlib import Path

import sympy as sp

x, y = sp.symbols("x y")
NAMES = ["a1", "a2", "a3", "a4", "b1", "b2", "b3", "c1", "c2", "a0"]
# multiplicity of each named coefficient in the raw expansion
MONOMIALS = [(3, 0, 1), (2, 1, 3), (1, 2, 3), (0, 3, 1), (2, 0, 1), (1, 1, 2), (0, 2, 1), (1, 0, 1), (0, 1, 1), (0, 0, 1)]
R = sp.Rational


def text(e):
    s = sp.sstr(sp.expand(e), order="lex")
    if "e-" in s or "E" in s:
        raise ValueError("unsupported expression: " + s)
    return s.replace("**", "^").replace("log(", "ln(")


def raw(named):
    return {(i, j): m * named[n] for n, (i, j, m) in enumerate(MONOMIALS)}


def named(raw_coeffs):
    return [sp.expand(raw_coeffs.get((i, j), 0) / m) for (i, j, m) in MONOMIALS]


def pushforward_linear(a, M, t):
    """q = M x + t; d/dx_i = sum_k M[k][i] d/dq_k, coefficients taken at x = M^-1 (q - t)."""
    X, Y = sp.symbols("X Y")
    Dx = M[0][0] * X + M[1][0] * Y
    Dy = M[0][1] * X + M[1][1] * Y
    poly = sum(c * Dx**i * Dy**j for (i, j), c in raw(a).items())
    poly = sp.Poly(sp.expand(poly), X, Y)
    Minv = sp.Matrix(M).inv()
    back = Minv * sp.Matrix([x - t[0], y - t[1]])
    out = {}
    for (i, j), c in zip(poly.monoms(), poly.coeffs()):
        out[(i, j)] = sp.expand(c.subs({x: back[0], y: back[1]}, simultaneous=True))
    return named(out)


def gauge(a, h):
    """f -> h A(f / h)."""
    f = sp.Function("f")(x, y)
    g = f / h
    total = sum(c * sp.diff(g, x, i, y, j) if i + j else c * g for (i, j), c in raw(a).items())
    total = sp.expand(h * total)
    out = {}
    for i in range(4):
        for j in range(4 - i):
            d = sp.diff(f, x, i, y, j) if i + j else f
            out[(i, j)] = sp.simplify(total.coeff(d))
            total = sp.expand(total - out[(i, j)] * d)
    assert sp.simplify(total) == 0
    return named(out)


def spec(coeffs, domain, bundle=False):
    doc = {"coefficients": {n: text(c) for n, c in zip(NAMES, coeffs) if sp.expand(c) != 0}}
    if bundle:
        doc["bundle"] = True
    doc["domain"] = domain
    return doc


def square(cx, cy, h, n):
    return {"x": [float(cx - h), float(cx + h)], "y": [float(cy - h), float(cy + h)], "nx": n, "ny": n}


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = square(0, 0, R(1, 2), 12)
    A = [1 + R(3, 10) * x + R(1, 5) * y**2, R(2, 5) * sp.sin(x + y), R(1, 2) + R(1, 5) * x * y,
         -1 + R(3, 10) * sp.exp(x / 2), R(3, 10) * x, R(1, 5) * y, R(1, 10) * x * y, R(1, 2) * y,
         R(1, 5) * x**2, 1 + R(1, 10) * x]
    H = [R(1, 10) * x, (1 + R(3, 10) * y**2 + R(1, 5) * sp.sin(x)) / 3, (R(4, 5) + R(1, 5) * x * y) / 3,
         R(1, 10) * y] + A[4:]
    M = [[R(11, 10), R(1, 5)], [R(-1, 10), R(9, 10)]]
    t = [R(1, 10), R(-1, 20)]
    B = pushforward_linear(A, M, t)
    image = square(t[0], t[1], R(7, 20), 12)
    h = sp.exp(R(3, 10) * x - R(1, 5) * y)
    files = {
        "generic.json": spec(A, base),
        "generic_bundle.json": spec(A, base, bundle=True),
        "pushforward.json": spec(B, image),
        "gauged_pushforward.json": spec(gauge(B, h), image, bundle=True),
        "hyperbolic.json": spec(H, base),
        "hyperbolic_rescaled.json": spec([sp.exp(y / 5) * c for c in H], base),
        "hyperbolic_negated.json": spec([-c for c in H], base),
        "perturbed.json": spec(A[:9] + [A[9] + R(1, 10)], base),
        "ultrahyperbolic.json": spec([1, 0, 0, 1] + [0] * 6, square(0, 0, 1, 5)),
        "constant.json": spec([0, 1, 1, 0] + [0] * 6, square(0, 0, R(1, 2), 8)),
        "singular.json": spec([1] + [0] * 9, square(0, 0, 1, 4)),
        "exp_family.json": spec([0, sp.exp(y) / 3, R(1, 3), 0] + [0] * 6, square(0, 0, R(1, 2), 6)),
        "log_domain.json": spec([sp.log(x), 0, 0, 1] + [0] * 6, square(0, 0, 1, 5)),
        "small_grid.json": spec(A, square(0, 0, R(1, 2), 4)),
    }
    for name, doc in files.items():
        (out / name).write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/cli/fixtures")
