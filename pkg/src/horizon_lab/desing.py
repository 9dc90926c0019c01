"""Exact construction of desingularized vector fields on compactified charts.

Given an asymptotically quasi-homogeneous field f and its type, the rescaled
field extends smoothly to the horizon after multiplying the time
parametrization by a vanishing factor.  In the parabolic chart the result is

    g(x) = q(x) f~(x) - G(x) Lambda_alpha x,        dt/dtau = q(x) W(x)**k,

with q = 1 - (2c-1)/(2c) * W, f~_i = sum coeff * W**(k + alpha_i - <m,alpha>)
* prod x**m, and G = sum_{j in I_alpha} x_j**(2 beta_j - 1)/alpha_j * f~_j.
In a directional chart over sign * y_i0 > 0,

    ds/dtau   = -(sign/alpha_i0) * s * f^_i0,
    dx^_i/dtau = f^_i - sign * (alpha_i/alpha_i0) * x^_i * f^_i0,
    dt/dtau   = s**k,

where f^ folds sign**(m_i0) into each rescaled monomial.  Both constructions
happen symbolically on sparse exponent dictionaries, so the field is evaluated
in closed form: nothing is ever computed at infinity, and powers of the
horizon functions W and s appear with provably nonnegative exponents.

Evaluation compiles each field once into plain Python expressions (value,
Jacobian, time factor); the Jacobian is the exact term-wise derivative,
including the chain rule through W.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Dict, Optional, Tuple, Union

import numpy as np

from .charts import DirectionalChart, ParabolicChart
from .errors import (
    AlreadyExtendedError,
    ChartDomainError,
    DomainError,
    NegativeWExponentError,
)
from .homogeneity import (
    ExtendedFieldSpec,
    FieldSpec,
    HomogeneityType,
    Monomial,
    _degree_cmp,
    _exactify,
    power,
)

__all__ = [
    "DesingField",
    "extend_nonautonomous",
    "build_parabolic_desing",
    "build_directional_desing",
    "evaluate_desing",
]

Real = Union[int, float, Fraction]

# A polynomial in (chart coords, W): {(exps, w_exp): coeff}.  In directional
# charts the s-powers live in the i0 slot of exps and w_exp stays 0.
TermKey = Tuple[Tuple[Real, ...], Real]
Poly = Dict[TermKey, float]


def _canon_e(e: Real) -> Real:
    """Canonicalize an exponent: integral values become ints."""
    if isinstance(e, bool):  # pragma: no cover - defensive
        raise TypeError("boolean exponent")
    if isinstance(e, int):
        return e
    if isinstance(e, Fraction):
        return int(e) if e.denominator == 1 else e
    if isinstance(e, float) and e.is_integer():
        return int(e)
    return e


def _eadd(a: Real, b: Real) -> Real:
    if isinstance(a, float) or isinstance(b, float):
        return _canon_e(float(a) + float(b))
    return _canon_e(
        (a if isinstance(a, (int, Fraction)) else Fraction(a))
        + (b if isinstance(b, (int, Fraction)) else Fraction(b))
    )


def _padd(dst: Poly, key: TermKey, coeff: float) -> None:
    cur = dst.get(key, 0.0) + coeff
    if cur == 0.0:
        dst.pop(key, None)
    else:
        dst[key] = cur


def _pscale(p: Poly, c: float) -> Poly:
    if c == 0.0:
        return {}
    return {k: v * c for k, v in p.items()}


def _pmul_var(p: Poly, j: int, e: Real) -> Poly:
    """Multiply a polynomial by x_j**e."""
    out: Poly = {}
    for (exps, w), coeff in p.items():
        new = list(exps)
        new[j] = _eadd(new[j], e)
        _padd(out, (tuple(new), w), coeff)
    return out


def _pmul_w(p: Poly, e: Real) -> Poly:
    out: Poly = {}
    for (exps, w), coeff in p.items():
        _padd(out, (exps, _eadd(w, e)), coeff)
    return out


def _pmul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for (ea, wa), ca in a.items():
        for (eb, wb), cb in b.items():
            exps = tuple(_eadd(x, y) for x, y in zip(ea, eb))
            _padd(out, (exps, _eadd(wa, wb)), ca * cb)
    return out


def _pdiff_var(p: Poly, j: int) -> Poly:
    """Formal d/dx_j treating W as an independent symbol."""
    out: Poly = {}
    for (exps, w), coeff in p.items():
        e = exps[j]
        if e == 0:
            continue
        new = list(exps)
        new[j] = _eadd(e, -1)
        _padd(out, (tuple(new), w), coeff * float(e))
    return out


def _pdiff_w(p: Poly) -> Poly:
    out: Poly = {}
    for (exps, w), coeff in p.items():
        if w == 0:
            continue
        _padd(out, (exps, _eadd(w, -1)), coeff * float(w))
    return out


def _zero_exps(n: int) -> Tuple[Real, ...]:
    return (0,) * n


# --------------------------------------------------------------------------
# code generation


def _fmt_float(x: float) -> str:
    return repr(float(x))


def _emit_power(sym: str, e: Real, clamped_sym: Optional[str] = None) -> str:
    e = _canon_e(e)
    if isinstance(e, int):
        if e == 1:
            return sym
        return f"{sym}**({e})" if e < 0 else f"{sym}**{e}"
    target = clamped_sym if clamped_sym is not None else sym
    return f"_pw({target}, {_fmt_float(float(e))})"


class _Emitter:
    """Shared expression emitter for one desingularized field."""

    def __init__(self, n: int, parabolic: bool, two_beta: np.ndarray,
                 i_alpha: Tuple[int, ...], gap_slot: Optional[int]):
        self.n = n
        self.parabolic = parabolic
        self.two_beta = two_beta
        self.i_alpha = i_alpha
        self.gap_slot = gap_slot  # directional: slot index of s
        self.needs_w_clamp = False
        self.needs_s_clamp = False

    def var(self, j: int) -> str:
        return f"x{j}"

    def term(self, exps: Tuple[Real, ...], w: Real, coeff: float) -> str:
        factors = []
        for j, e in enumerate(exps):
            if e == 0:
                continue
            clamp = None
            if self.gap_slot is not None and j == self.gap_slot and not isinstance(_canon_e(e), int):
                clamp = f"x{j}c"
                self.needs_s_clamp = True
            factors.append(_emit_power(self.var(j), e, clamp))
        if w != 0:
            if not isinstance(_canon_e(w), int):
                self.needs_w_clamp = True
                factors.append(_emit_power("W", w, "Wc"))
            else:
                factors.append(_emit_power("W", w))
        if not factors:
            return _fmt_float(coeff)
        if coeff == 1.0:
            return "*".join(factors)
        if coeff == -1.0:
            return "-" + "*".join(factors)
        return "*".join([_fmt_float(coeff)] + factors)

    def poly(self, p: Poly) -> str:
        if not p:
            return "0.0"
        # deterministic source: sort terms by exponent signature
        items = sorted(p.items(), key=lambda kv: (tuple(map(float, kv[0][0])),
                                                  float(kv[0][1])))
        parts = [self.term(exps, w, coeff) for (exps, w), coeff in items]
        expr = parts[0]
        for piece in parts[1:]:
            expr += (" - " + piece[1:]) if piece.startswith("-") else (" + " + piece)
        return expr

    def preamble(self) -> str:
        lines = []
        for j in range(self.n):
            lines.append(f"    x{j} = z[{j}]")
        if self.parabolic:
            terms = [
                _emit_power(f"x{j}", int(self.two_beta[j])) for j in self.i_alpha
            ]
            lines.append(f"    W = 1.0 - ({' + '.join(terms)})")
            if self.needs_w_clamp:
                lines.append("    Wc = W if W > 0.0 else 0.0")
        elif self.needs_s_clamp:
            j = self.gap_slot
            lines.append(f"    x{j}c = x{j} if x{j} > 0.0 else 0.0")
        return "\n".join(lines)


def _compile_field(n: int, parabolic: bool, two_beta, i_alpha, gap_slot,
                   components: Tuple[Poly, ...], time_factor: Poly,
                   jac_rows: Tuple[Tuple[Poly, ...], ...]):
    em = _Emitter(n, parabolic, two_beta, i_alpha, gap_slot)
    comp_exprs = [em.poly(p) for p in components]
    tf_expr = em.poly(time_factor)
    jac_exprs = [[em.poly(p) for p in row] for row in jac_rows]
    # preamble emitted last: clamping needs are discovered while emitting
    pre = em.preamble()
    g_body = ",\n        ".join(comp_exprs)
    j_body = ",\n        ".join(
        "(" + ", ".join(row) + ("," if len(row) == 1 else "") + ")"
        for row in jac_exprs
    )
    src = (
        f"def _rhs(z):\n{pre}\n    return (\n        {g_body},\n"
        f"        {tf_expr},\n    )\n\n"
        f"def _jac(z):\n{pre}\n    return (\n        {j_body},\n    )\n"
    )
    ns: dict = {"_pw": power, "math": math}
    exec(compile(src, "<desing-field>", "exec"), ns)
    return ns["_rhs"], ns["_jac"], src


@dataclass(frozen=True, eq=False)
class DesingField:
    """A desingularized field on a chart, stored as extended monomials.

    ``components[i]`` and ``time_factor`` map (coordinate exponents,
    W-exponent) to coefficients; W is recomputed from the coordinates at
    evaluation time, which keeps the horizon exact.  Evaluation goes through
    expressions compiled once at construction.
    """

    chart: Union[ParabolicChart, DirectionalChart]
    htype: HomogeneityType
    source: FieldSpec
    components: Tuple[Poly, ...]
    time_factor: Poly
    metadata: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        parabolic = isinstance(self.chart, ParabolicChart)
        jac_rows = tuple(
            tuple(self._component_partial(i, j) for j in range(self.n))
            for i in range(self.n)
        )
        rhs, jac, src = _compile_field(
            self.n,
            parabolic,
            2 * self.htype.beta_full(),
            self.htype.i_alpha,
            None if parabolic else self.chart.i0,
            self.components,
            self.time_factor,
            jac_rows,
        )
        object.__setattr__(self, "_rhs", rhs)
        object.__setattr__(self, "_jac", jac)
        object.__setattr__(self, "source_code", src)

    @property
    def n(self) -> int:
        return self.htype.n

    @property
    def nonautonomous(self) -> bool:
        return self.source.nonautonomous

    def _component_partial(self, i: int, j: int) -> Poly:
        """Exact d g_i / d x_j including the chain rule through W."""
        p = self.components[i]
        out = _pdiff_var(p, j)
        if isinstance(self.chart, ParabolicChart) and j in self.htype.i_alpha:
            tb = int(2 * self.htype.beta_of(j))
            dw = _pdiff_w(p)
            if dw:
                chain = _pmul_var(dw, j, tb - 1)
                for key, coeff in _pscale(chain, -float(tb)).items():
                    _padd(out, key, coeff)
        return out

    # -- evaluation ------------------------------------------------------

    def rhs_values(self, coords) -> Tuple[float, ...]:
        """(g_0, ..., g_{n-1}, dt_dtau) in one compiled call."""
        z = [float(v) for v in coords]
        try:
            return self._rhs(z)
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise DomainError(f"field evaluation failed at {z}: {exc}") from exc

    def g(self, coords) -> np.ndarray:
        return np.asarray(self.rhs_values(coords)[:-1], dtype=float)

    def time_scale(self, coords) -> float:
        return float(self.rhs_values(coords)[-1])

    def jacobian(self, coords) -> np.ndarray:
        z = [float(v) for v in coords]
        try:
            rows = self._jac(z)
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise DomainError(f"jacobian evaluation failed at {z}: {exc}") from exc
        return np.asarray(rows, dtype=float)

    def horizon_gap(self, coords) -> float:
        return float(self.chart.horizon_gap_of(np.asarray(coords, dtype=float)))


def evaluate_desing(dfield: DesingField, coords) -> Tuple[np.ndarray, np.ndarray, float]:
    """Evaluate (g, Jacobian, dt/dtau) at chart coordinates.

    Coordinates must lie in the closed chart domain (a 1e-9 grace below the
    horizon absorbs roundoff); on the horizon of a nonautonomous field the
    returned dt/dtau is exactly zero.
    """
    x = np.asarray(coords, dtype=float)
    if x.shape != (dfield.n,):
        raise ValueError(f"coords shape {x.shape}, expected ({dfield.n},)")
    gap = dfield.horizon_gap(x)
    if not math.isfinite(gap) or gap < -1e-9:
        raise DomainError(
            f"coordinates outside the closed chart domain (gap = {gap})"
        )
    values = dfield.rhs_values(x)
    return (
        np.asarray(values[:-1], dtype=float),
        dfield.jacobian(x),
        float(values[-1]),
    )


# --------------------------------------------------------------------------
# constructions


def extend_nonautonomous(
    field: FieldSpec, htype: HomogeneityType
) -> Tuple[ExtendedFieldSpec, HomogeneityType]:
    """Prepend the time variable (weight 0, equation t' = 1) to a field.

    Fields already marked nonautonomous (variable 0 is t) are rebranded in
    place after checking the weights; autonomous fields gain a fresh
    decoupled t.  Applying the extension twice raises AlreadyExtendedError.
    """
    if isinstance(field, ExtendedFieldSpec):
        raise AlreadyExtendedError("field already carries the time extension")
    if field.nonautonomous:
        if htype.n == field.n:
            if htype.alpha[0] != 0:
                raise DomainError("time variable must have weight 0")
            new_htype = htype
        elif htype.n == field.n - 1:
            new_htype = HomogeneityType(alpha=(0,) + htype.alpha, k=htype.k)
        else:
            raise ValueError(
                f"type arity {htype.n} does not match field arity {field.n}"
            )
        extended = ExtendedFieldSpec(
            variable_names=field.variable_names,
            components=field.components,
            nonautonomous=True,
        )
        return extended, new_htype
    if htype.n != field.n:
        raise ValueError(
            f"type arity {htype.n} does not match field arity {field.n}"
        )
    t_name = "t"
    while t_name in field.variable_names:
        t_name += "_"
    names = (t_name,) + field.variable_names
    shifted = tuple(
        tuple(
            Monomial(coeff=m.coeff, exponents=(0,) + m.exponents)
            for m in comp
        )
        for comp in field.components
    )
    n_new = field.n + 1
    components = ((Monomial(coeff=1.0, exponents=(0,) * n_new),),) + shifted
    extended = ExtendedFieldSpec(
        variable_names=names, components=components, nonautonomous=True
    )
    new_htype = HomogeneityType(alpha=(0,) + htype.alpha, k=htype.k)
    return extended, new_htype


def _rescale_exponent(htype: HomogeneityType, comp_index: int, m: Monomial) -> Real:
    """W/s exponent k + alpha_i - <m, alpha>; negative means not AQH."""
    k = htype.k
    ke = _exactify(k)
    d = m.weighted_degree(htype.alpha)
    if ke is not None and isinstance(d, Fraction):
        w = ke + htype.alpha[comp_index] - d
    else:
        w = float(k) + htype.alpha[comp_index] - float(d)
    cmp = _degree_cmp(w, 0)
    if cmp < 0:
        raise NegativeWExponentError(
            f"monomial {m} in component {comp_index} has weighted degree "
            f"{d} > k + alpha_i = {_eadd(k, htype.alpha[comp_index])}; "
            f"the field is not asymptotically quasi-homogeneous of this type"
        )
    return 0 if cmp == 0 else _canon_e(w)


def build_parabolic_desing(field: FieldSpec, htype: HomogeneityType) -> DesingField:
    """Desingularize a field on the global parabolic chart.

    Raises NegativeWExponentError when the type bound fails, and DomainError
    when a monomial has a negative or fractional exponent on a positively
    weighted variable -- those cross zero inside this chart, so a directional
    chart must be used instead.
    """
    if htype.n != field.n:
        raise ValueError(
            f"type arity {htype.n} does not match field arity {field.n}"
        )
    n = field.n
    for i, comp in enumerate(field.components):
        for m in comp:
            for j in htype.i_alpha:
                e = _canon_e(m.exponents[j])
                if not isinstance(e, int) or e < 0:
                    raise DomainError(
                        f"component {i}: exponent {m.exponents[j]} on "
                        f"positively weighted variable "
                        f"'{field.variable_names[j]}' is not valid on the "
                        f"parabolic chart (the variable crosses zero); use a "
                        f"directional chart"
                    )
    zero = _zero_exps(n)
    ftilde = []
    for i, comp in enumerate(field.components):
        p: Poly = {}
        for m in comp:
            w = _rescale_exponent(htype, i, m)
            _padd(p, (tuple(_canon_e(e) for e in m.exponents), w), m.coeff)
        ftilde.append(p)
    tc = 2 * htype.c
    q: Poly = {(zero, 0): 1.0, (zero, 1): -(tc - 1) / tc}
    G: Poly = {}
    for pos, j in enumerate(htype.i_alpha):
        tbj = 2 * htype.beta[pos]
        scaled = _pmul_var(_pscale(ftilde[j], 1.0 / htype.alpha[j]), j, tbj - 1)
        for key, coeff in scaled.items():
            _padd(G, key, coeff)
    components = []
    for i in range(n):
        gi = _pmul(q, ftilde[i])
        ai = htype.alpha[i]
        if ai:
            for key, coeff in _pscale(_pmul_var(G, i, 1), -float(ai)).items():
                _padd(gi, key, coeff)
        components.append(gi)
    time_factor = _pmul_w(q, htype.k)
    return DesingField(
        chart=ParabolicChart(htype=htype),
        htype=htype,
        source=field,
        components=tuple(components),
        time_factor=time_factor,
        metadata={
            "construction": "parabolic",
            "variable_names": field.variable_names,
            "k": float(htype.k),
            "alpha": htype.alpha,
        },
    )


def build_directional_desing(
    field: FieldSpec, htype: HomogeneityType, chart: DirectionalChart
) -> DesingField:
    """Desingularize a field on one directional chart.

    The chart sign is folded into each rescaled monomial as sign**(m_i0); for
    the - chart the sign also flips the s-equation and the coupling terms,
    which is exactly what conjugating by y_i0 = -s**(-alpha_i0) produces.
    Cross-chart trajectory agreement is the correctness oracle for the -
    chart (tested), not trust in any one printed formula.
    """
    if htype.n != field.n:
        raise ValueError(
            f"type arity {htype.n} does not match field arity {field.n}"
        )
    if chart.htype.alpha != htype.alpha:
        raise ChartDomainError("chart was built for a different type")
    n = field.n
    i0 = chart.i0
    sigma = chart.sign
    a0 = htype.alpha[i0]
    for i, comp in enumerate(field.components):
        for m in comp:
            e0 = _canon_e(m.exponents[i0])
            if sigma < 0 and not isinstance(e0, int):
                raise ChartDomainError(
                    f"component {i}: fractional exponent {m.exponents[i0]} on "
                    f"the chart variable of a negative chart is complex-valued"
                )
            for j in htype.i_alpha:
                if j == i0:
                    continue
                e = _canon_e(m.exponents[j])
                if not isinstance(e, int):
                    raise DomainError(
                        f"component {i}: fractional exponent {m.exponents[j]} "
                        f"on variable '{field.variable_names[j]}', which "
                        f"crosses zero inside this chart"
                    )
    fhat = []
    for i, comp in enumerate(field.components):
        p: Poly = {}
        for m in comp:
            s_exp = _rescale_exponent(htype, i, m)
            e0 = _canon_e(m.exponents[i0])
            if sigma < 0 and isinstance(e0, int) and (e0 % 2):
                coeff = -m.coeff
            else:
                coeff = m.coeff
            exps = [_canon_e(e) for e in m.exponents]
            exps[i0] = s_exp
            _padd(p, (tuple(exps), 0), coeff)
        fhat.append(p)
    components = []
    for i in range(n):
        if i == i0:
            gi = _pscale(_pmul_var(fhat[i0], i0, 1), -float(sigma) / a0)
        else:
            gi = dict(fhat[i])
            ai = htype.alpha[i]
            if ai:
                coupling = _pscale(
                    _pmul_var(fhat[i0], i, 1), -float(sigma) * ai / a0
                )
                for key, coeff in coupling.items():
                    _padd(gi, key, coeff)
        components.append(gi)
    zero = list(_zero_exps(n))
    zero[i0] = _canon_e(htype.k)
    time_factor: Poly = {(tuple(zero), 0): 1.0}
    return DesingField(
        chart=chart,
        htype=htype,
        source=field,
        components=tuple(components),
        time_factor=time_factor,
        metadata={
            "construction": "directional",
            "i0": i0,
            "sign": sigma,
            "variable_names": field.variable_names,
            "k": float(htype.k),
            "alpha": htype.alpha,
        },
    )
