"""Built-in symbol catalog.

Symbols are assembled from three kinds of factors: polynomial/bracket factors
in the frequency variable, trigonometric profiles or complex modulations in
the spatial variable, and affine multipliers in the driving path value w(t).
Each catalog entry carries closed-form first derivatives in xi and x so that
asymptotic composition does not fall back to finite differences.

Entries are addressable by selector strings of the form `name` or
`name:arg1,arg2,...` (all arguments numeric); see CATALOG_SYMBOLS and
CATALOG_PRINCIPALS for the registry.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .symbols import Coords, PrincipalSymbol, Symbol, abs2, magnitude


def _broadcast_shape(x: Coords, xi: Coords):
    return np.broadcast_shapes(*(np.shape(a) for a in x + xi))


def _const_like(x: Coords, xi: Coords, value: complex) -> np.ndarray:
    return np.full(_broadcast_shape(x, xi), value, dtype=complex)


# ---------------------------------------------------------------------------
# elementary symbols


def _bare_constant(value: complex, name: str | None = None) -> Symbol:
    return Symbol(name or f"const[{value}]", 0.0,
                  lambda t, slc, x, xi: _const_like(x, xi, value))


def constant(value: complex, name: str | None = None) -> Symbol:
    # partials are bare (derivative-less) zeros: composition is first-order,
    # so derivative symbols only need to be evaluable, not differentiable
    sym = _bare_constant(value, name)
    z = _bare_constant(0.0, "zero")
    sym.xi_partials = (z, z)
    sym.x_partials = (z, z)
    return sym


def one() -> Symbol:
    return constant(1.0, "one")


def zero_symbol() -> Symbol:
    return constant(0.0, "zero")


def lambda_symbol(s: float) -> Symbol:
    """Bracket multiplier (1 + |xi|^2)^(s/2) of order s."""

    def fn(t, slc, x, xi):
        return _const_like(x, (), 1.0) * (1.0 + abs2(xi)) ** (s / 2.0)

    sym = Symbol(f"lambda[{s}]", s, fn)
    if s != 0.0:
        def partial(axis):
            def dfn(t, slc, x, xi, axis=axis):
                return _const_like(x, (), s) * xi[axis] * (1.0 + abs2(xi)) ** ((s - 2.0) / 2.0)
            return Symbol(f"d_xi{axis} lambda[{s}]", s - 1.0, dfn)
        sym.xi_partials = (partial(0), partial(1))
    else:
        z = zero_symbol()
        sym.xi_partials = (z, z)
    z = zero_symbol()
    sym.x_partials = (z, z)
    return sym


def xi_symbol(axis: int = 0) -> Symbol:
    def fn(t, slc, x, xi, axis=axis):
        return _const_like(x, (), 1.0) * xi[axis].astype(complex)

    sym = Symbol(f"xi{axis}", 1.0, fn, homogeneity_degree=1.0)
    parts = [zero_symbol(), zero_symbol()]
    parts[axis] = one()
    sym.xi_partials = tuple(parts)
    z = zero_symbol()
    sym.x_partials = (z, z)
    return sym


def xi_power(degree: int, axis: int = 0) -> Symbol:
    if degree == 0:
        return one()
    if degree == 1:
        return xi_symbol(axis)

    def fn(t, slc, x, xi, axis=axis):
        return _const_like(x, (), 1.0) * xi[axis].astype(complex) ** degree

    sym = Symbol(f"xi{axis}^{degree}", float(degree), fn, homogeneity_degree=float(degree))
    parts = [zero_symbol(), zero_symbol()]
    parts[axis] = symbol_scale(float(degree), xi_power(degree - 1, axis))
    sym.xi_partials = tuple(parts)
    z = zero_symbol()
    sym.x_partials = (z, z)
    return sym


def xi_magnitude() -> Symbol:
    """|xi|, order 1. The xi = 0 kink is routed to derivative 0 by convention."""

    def fn(t, slc, x, xi):
        return _const_like(x, (), 1.0) * magnitude(xi).astype(complex)

    sym = Symbol("abs-xi", 1.0, fn, homogeneity_degree=1.0)

    def partial(axis):
        def dfn(t, slc, x, xi, axis=axis):
            r = magnitude(xi)
            with np.errstate(invalid="ignore", divide="ignore"):
                v = np.where(r > 0, xi[axis] / np.where(r > 0, r, 1.0), 0.0)
            return _const_like(x, (), 1.0) * v.astype(complex)
        return Symbol(f"d_xi{axis} abs-xi", 0.0, dfn)

    sym.xi_partials = (partial(0), partial(1))
    z = zero_symbol()
    sym.x_partials = (z, z)
    return sym


def _trig_raw(c0: float, c_sin: float, c_cos: float, k: int, axis: int) -> Symbol:
    def fn(t, slc, x, xi, axis=axis):
        v = c0 + c_sin * np.sin(k * x[axis]) + c_cos * np.cos(k * x[axis])
        return _const_like((), xi, 1.0) * np.asarray(v, dtype=complex)

    sym = Symbol(f"trig[{c0},{c_sin},{c_cos};k={k}]", 0.0, fn)
    z = zero_symbol()
    sym.xi_partials = (z, z)
    return sym


def trig_profile(c0: float, c_sin: float, c_cos: float, k: int = 1, axis: int = 0) -> Symbol:
    """x-dependent order-0 factor c0 + c_sin*sin(kx) + c_cos*cos(kx)."""
    sym = _trig_raw(c0, c_sin, c_cos, k, axis)
    parts = [zero_symbol(), zero_symbol()]
    if c_sin or c_cos:
        # one derivative level is enough for first-order composition
        parts[axis] = _trig_raw(0.0, -k * c_cos, k * c_sin, k, axis)
    sym.x_partials = tuple(parts)
    return sym


def _modulation_raw(k: int, axis: int) -> Symbol:
    def fn(t, slc, x, xi, axis=axis):
        return _const_like((), xi, 1.0) * np.exp(1j * k * np.asarray(x[axis]))

    sym = Symbol(f"mod[{k}]", 0.0, fn)
    z = zero_symbol()
    sym.xi_partials = (z, z)
    return sym


def modulation(k: int, axis: int = 0) -> Symbol:
    """Complex modulation e^{i k x}; shifts Fourier modes by k under quantization."""
    sym = _modulation_raw(k, axis)
    parts = [zero_symbol(), zero_symbol()]
    if k:
        parts[axis] = symbol_scale(1j * k, _modulation_raw(k, axis))
    sym.x_partials = tuple(parts)
    return sym


def brownian_affine(gamma: float) -> Symbol:
    """Path-dependent multiplier 1 + gamma * w(t), adapted by construction."""

    def fn(t, slc, x, xi):
        w = 0.0 if slc is None else slc.value(t)
        return _const_like(x, xi, 1.0 + gamma * w)

    sym = Symbol(f"affine-w[{gamma}]", 0.0, fn, requires_path=gamma != 0.0)
    z = zero_symbol()
    sym.xi_partials = (z, z)
    sym.x_partials = (z, z)
    return sym


# ---------------------------------------------------------------------------
# combinators


def _both(a: Symbol | None, b: Symbol | None):
    return a is not None and b is not None


def symbol_scale(c: complex, a: Symbol, name: str | None = None) -> Symbol:
    sym = Symbol(name or f"{c}*{a.name}", a.order,
                 lambda t, slc, x, xi: c * a.fn(t, slc, x, xi),
                 integrability=a.integrability,
                 homogeneity_degree=a.homogeneity_degree,
                 requires_path=a.requires_path)
    if a.xi_partials is not None:
        sym.xi_partials = tuple(None if p is None else symbol_scale(c, p) for p in a.xi_partials)
    if a.x_partials is not None:
        sym.x_partials = tuple(None if p is None else symbol_scale(c, p) for p in a.x_partials)
    return sym


def symbol_sum(a: Symbol, b: Symbol, name: str | None = None) -> Symbol:
    sym = Symbol(name or f"({a.name}+{b.name})", max(a.order, b.order),
                 lambda t, slc, x, xi: a.fn(t, slc, x, xi) + b.fn(t, slc, x, xi),
                 integrability=min(a.integrability, b.integrability),
                 requires_path=a.requires_path or b.requires_path)
    if a.homogeneity_degree is not None and a.homogeneity_degree == b.homogeneity_degree:
        sym.homogeneity_degree = a.homogeneity_degree
    if a.xi_partials is not None and b.xi_partials is not None:
        sym.xi_partials = tuple(
            symbol_sum(pa, pb) if _both(pa, pb) else None
            for pa, pb in zip(a.xi_partials, b.xi_partials))
    if a.x_partials is not None and b.x_partials is not None:
        sym.x_partials = tuple(
            symbol_sum(pa, pb) if _both(pa, pb) else None
            for pa, pb in zip(a.x_partials, b.x_partials))
    return sym


def symbol_product(a: Symbol, b: Symbol, name: str | None = None) -> Symbol:
    sym = Symbol(name or f"{a.name}*{b.name}", a.order + b.order,
                 lambda t, slc, x, xi: a.fn(t, slc, x, xi) * b.fn(t, slc, x, xi),
                 integrability=min(a.integrability, b.integrability),
                 requires_path=a.requires_path or b.requires_path)
    if a.homogeneity_degree is not None and b.homogeneity_degree is not None:
        sym.homogeneity_degree = a.homogeneity_degree + b.homogeneity_degree
    if a.xi_partials is not None and b.xi_partials is not None:
        parts = []
        for pa, pb in zip(a.xi_partials, b.xi_partials):
            parts.append(symbol_sum(symbol_product(pa, b), symbol_product(a, pb))
                         if _both(pa, pb) else None)
        sym.xi_partials = tuple(parts)
    if a.x_partials is not None and b.x_partials is not None:
        parts = []
        for pa, pb in zip(a.x_partials, b.x_partials):
            parts.append(symbol_sum(symbol_product(pa, b), symbol_product(a, pb))
                         if _both(pa, pb) else None)
        sym.x_partials = tuple(parts)
    return sym


def symbol_conjugate(a: Symbol) -> Symbol:
    sym = Symbol(f"conj[{a.name}]", a.order,
                 lambda t, slc, x, xi: np.conj(a.fn(t, slc, x, xi)),
                 integrability=a.integrability,
                 homogeneity_degree=a.homogeneity_degree,
                 requires_path=a.requires_path)
    if a.xi_partials is not None:
        sym.xi_partials = tuple(None if p is None else symbol_conjugate(p) for p in a.xi_partials)
    if a.x_partials is not None:
        sym.x_partials = tuple(None if p is None else symbol_conjugate(p) for p in a.x_partials)
    return sym


def with_declared_order(a: Symbol, order: float) -> Symbol:
    """Same evaluation rule with a (possibly wrong) declared order, for auditing."""
    return Symbol(a.name, order, a.fn, a.integrability, a.homogeneity_degree,
                  a.requires_path, a.xi_partials, a.x_partials)


# ---------------------------------------------------------------------------
# named symbol registry


def _trig_lambda(c0, c_sin, c_cos, s):
    return symbol_product(trig_profile(c0, c_sin, c_cos), lambda_symbol(s),
                          name=f"trig-lambda[{c0},{c_sin},{c_cos};{s}]")


def _mod_xi(k):
    return symbol_product(modulation(int(k)), xi_symbol(), name=f"mod-xi[{int(k)}]")


def _brownian_lambda(gamma, s):
    return symbol_product(brownian_affine(gamma), lambda_symbol(s),
                          name=f"brownian-lambda[{gamma},{s}]")


def _xi_poly(*coeffs):
    sym = constant(coeffs[0]) if coeffs else zero_symbol()
    for d, c in enumerate(coeffs[1:], start=1):
        if c != 0:
            sym = symbol_sum(sym, symbol_scale(c, xi_power(d)))
    sym.name = f"xi-poly{list(coeffs)}"
    return sym


CATALOG_SYMBOLS: dict[str, tuple[Callable[..., Symbol], str]] = {
    "one": (one, "constant 1 (identity operator), order 0"),
    "zero": (zero_symbol, "constant 0, order 0"),
    "const": (lambda c: constant(c), "const:c -> constant c, order 0"),
    "lambda": (lambda_symbol, "lambda:s -> (1+|xi|^2)^(s/2), order s"),
    "xi": (xi_symbol, "xi -> frequency coordinate, order 1"),
    "c-dx": (lambda c=1.0: symbol_scale(c, xi_symbol(), name=f"c-dx[{c}]"),
             "c-dx:c -> c xi, the symbol of c times the first spatial derivative"),
    "xi2": (lambda: xi_power(2), "xi squared, order 2"),
    "xi-poly": (_xi_poly, "xi-poly:c0,c1,... -> sum c_d xi^d"),
    "abs-xi": (xi_magnitude, "|xi|, order 1"),
    "trig": (trig_profile, "trig:c0,csin,ccos[,k] -> x-profile, order 0"),
    "trig-lambda": (_trig_lambda,
                    "trig-lambda:c0,csin,ccos,s -> (c0+csin sin x+ccos cos x)(1+|xi|^2)^(s/2)"),
    "mod": (lambda k: modulation(int(k)), "mod:k -> e^{ikx}, order 0"),
    "mod-xi": (_mod_xi, "mod-xi:k -> e^{ikx} xi, order 1"),
    "affine-w": (brownian_affine, "affine-w:gamma -> 1+gamma w(t), order 0"),
    "brownian-lambda": (_brownian_lambda,
                        "brownian-lambda:gamma,s -> (1+gamma w(t))(1+|xi|^2)^(s/2)"),
}


def make_symbol(selector: str) -> Symbol:
    """Build a catalog symbol from `name` or `name:arg1,arg2,...`."""
    name, _, argstr = selector.partition(":")
    name = name.strip()
    if name not in CATALOG_SYMBOLS:
        known = ", ".join(sorted(CATALOG_SYMBOLS))
        raise ValueError(f"unknown symbol {name!r}; catalog has: {known}")
    factory = CATALOG_SYMBOLS[name][0]
    args = [float(a) for a in argstr.split(",")] if argstr.strip() else []
    try:
        return factory(*args)
    except TypeError as exc:
        raise ValueError(f"bad arguments for symbol {name!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# principal symbols (monic polynomials in tau)


def _rule_const(value: complex):
    def rule(t, slc, x, xi):
        return _const_like(x, xi, value)
    return rule


def wave_principal(c: float) -> PrincipalSymbol:
    """tau^2 - c^2 |xi|^2, roots +-c|xi| (real, simple away from xi = 0)."""

    def c0(t, slc, x, xi):
        return _const_like(x, (), 1.0) * (c * c) * abs2(xi)

    return PrincipalSymbol(f"wave[{c}]", 2, (c0, _rule_const(0.0)))


def laplace_principal() -> PrincipalSymbol:
    """tau^2 + |xi|^2, roots +-i|xi| (complex conjugate pair)."""

    def c0(t, slc, x, xi):
        return _const_like(x, (), -1.0) * abs2(xi)

    return PrincipalSymbol("laplace", 2, (c0, _rule_const(0.0)))


def double_root_principal() -> PrincipalSymbol:
    """(tau - xi)^2: the simple-root hypothesis fails everywhere."""

    def c0(t, slc, x, xi):
        return _const_like(x, (), -1.0) * xi[0] ** 2

    def c1(t, slc, x, xi):
        return _const_like(x, (), 2.0) * xi[0]

    return PrincipalSymbol("double-root", 2, (c0, c1))


def mixed_cubic_principal() -> PrincipalSymbol:
    """(tau - xi)(tau^2 + |xi|^2): one real and two conjugate branches."""

    def c2(t, slc, x, xi):
        return _const_like(x, (), 1.0) * xi[0]

    def c1(t, slc, x, xi):
        return _const_like(x, (), -1.0) * abs2(xi)

    def c0(t, slc, x, xi):
        return _const_like(x, (), 1.0) * xi[0] * abs2(xi)

    return PrincipalSymbol("mixed-cubic", 3, (c0, c1, c2))


def variable_wave_principal(c0: float = 2.0, c1: float = 0.5, gamma: float = 0.0) -> PrincipalSymbol:
    """tau^2 - q^2 |xi|^2 with q = c0 + c1 sin x + gamma w(t); roots +-q|xi|."""

    def coeff0(t, slc, x, xi):
        w = 0.0 if slc is None else slc.value(t)
        q = c0 + c1 * np.sin(x[0]) + gamma * w
        return (q * q) * abs2(xi) * _const_like((), (), 1.0)

    return PrincipalSymbol(f"variable-wave[{c0},{c1},{gamma}]", 2,
                           (coeff0, _rule_const(0.0)), requires_path=gamma != 0.0,
                           x_dependent=c1 != 0.0)


def from_roots_principal(unit_roots: Sequence[complex], name: str | None = None,
                         trig_eps: Sequence[float] | None = None) -> PrincipalSymbol:
    """Monic principal symbol with branch roots mu_k |xi| for xi on the ray.

    Coefficients come from the root polynomial and are xi-homogeneous; optional
    per-coefficient trig modulation (1 + eps_k sin x) adds x-dependence while
    keeping root separation for small eps.
    """
    mu = np.asarray(list(unit_roots), dtype=complex)
    m = len(mu)
    # numpy returns [1, p_{m-1}, ..., p_0] for tau^m + sum p_k tau^k
    poly = np.poly(mu)
    minus_c = -poly[1:][::-1]  # c_k for k = m-1 ... 0 reversed to k-ascending
    eps = list(trig_eps) if trig_eps is not None else [0.0] * m

    def make_rule(k):
        ck = complex(minus_c[k])
        ek = float(eps[k])

        def rule(t, slc, x, xi, ck=ck, ek=ek, k=k):
            mod = 1.0 + ek * np.sin(x[0]) if ek else 1.0
            return ck * mod * magnitude(xi) ** (m - k) * _const_like((), (), 1.0)

        return rule

    label = name or f"from-roots[{','.join(str(z) for z in mu)}]"
    return PrincipalSymbol(label, m, tuple(make_rule(k) for k in range(m)),
                           homogeneous=all(e == 0.0 for e in eps),
                           x_dependent=any(e != 0.0 for e in eps))


def random_principal(m: int, rng: np.random.Generator, *, min_separation: float = 0.6,
                     trig: bool = False) -> PrincipalSymbol:
    """Random catalog-style principal symbol with well-separated unit-scale roots."""
    while True:
        mu = rng.uniform(-2.0, 2.0, m) + 1j * rng.uniform(-2.0, 2.0, m)
        d = [abs(a - b) for i, a in enumerate(mu) for b in mu[i + 1:]]
        if not d or min(d) >= min_separation:
            break
    eps = rng.uniform(-0.2, 0.2, m) if trig else None
    return from_roots_principal(mu, name=f"random[m={m}]", trig_eps=eps)


CATALOG_PRINCIPALS: dict[str, tuple[Callable[..., PrincipalSymbol], str]] = {
    "wave": (wave_principal, "wave:c -> tau^2 - c^2|xi|^2, roots +-c|xi|"),
    "laplace": (laplace_principal, "tau^2 + |xi|^2, roots +-i|xi|"),
    "double-root": (double_root_principal, "(tau - xi)^2, degenerate"),
    "mixed-cubic": (mixed_cubic_principal, "(tau - xi)(tau^2 + |xi|^2)"),
    "variable-wave": (variable_wave_principal,
                      "variable-wave:c0,c1,gamma -> tau^2 - (c0+c1 sin x+gamma w)^2|xi|^2"),
    "from-roots": (lambda *mu: from_roots_principal([complex(v) for v in mu]),
                   "from-roots:mu1,mu2,... -> monic polynomial with roots mu_k|xi|"),
}


def make_principal(selector: str) -> PrincipalSymbol:
    """Build a catalog principal symbol from `name` or `name:arg1,...`."""
    name, _, argstr = selector.partition(":")
    name = name.strip()
    if name not in CATALOG_PRINCIPALS:
        known = ", ".join(sorted(CATALOG_PRINCIPALS))
        raise ValueError(f"unknown principal symbol {name!r}; catalog has: {known}")
    factory = CATALOG_PRINCIPALS[name][0]
    args = [float(a) for a in argstr.split(",")] if argstr.strip() else []
    try:
        return factory(*args)
    except TypeError as exc:
        raise ValueError(f"bad arguments for principal {name!r}: {exc}") from exc
