"""Flows, horizon equilibria and spectral analysis of desingularized fields.

The integrator is an embedded Dormand-Prince 5(4) pair with PI step control,
hand-rolled so the stopping semantics are exact: a trajectory ends with one of
four reasons (horizon_reached / tau_exhausted / left_domain / diverged), a
stage that probes outside the chart domain causes a retry with a smaller step
rather than a crash, and a step-size underflow raises StepFailure.  Physical
time is reconstructed along the way from the time factor dt/dtau.

Horizon equilibria are found by a damped Gauss-Newton iteration on the
augmented system [g(x); P(x) - 1] (parabolic) or on g restricted to {s = 0}
(directional), seeded on small grids.  Spectra are split into tangential /
stable / unstable parts with an explicit neutral tolerance so borderline
cases surface as 'nonhyperbolic' instead of a guess.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .charts import DirectionalChart, ParabolicChart
from .desing import DesingField
from .errors import (
    CurveBreak,
    DomainError,
    EigenFailure,
    InsufficientWindow,
    StepFailure,
)

__all__ = [
    "IntegratorControls",
    "Trajectory",
    "Equilibrium",
    "EquilibriumCurve",
    "SpectralSplit",
    "integrate",
    "find_horizon_equilibria",
    "spectrum_classify",
    "trace_equilibrium_curve",
    "check_nonresonance",
    "estimate_decay",
    "HORIZON_REACHED",
    "TAU_EXHAUSTED",
    "LEFT_DOMAIN",
    "DIVERGED",
    "TOL_NEUTRAL",
]

HORIZON_REACHED = "horizon_reached"
TAU_EXHAUSTED = "tau_exhausted"
LEFT_DOMAIN = "left_domain"
DIVERGED = "diverged"

TOL_NEUTRAL = 1e-8
_DOMAIN_SLACK = 1e-9  # grace below the horizon before calling it left_domain
_MIN_STEP = 1e-15
_STATE_GUARD = 1e100

# Dormand-Prince 5(4) tableau
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))


@dataclass
class IntegratorControls:
    """Tolerances and stopping thresholds for integrate().

    horizon_eps is the gap below which a trajectory counts as having reached
    the horizon; setting it to 0 disables that stop (used for invariance
    runs started exactly on the horizon).  max_step bounds the tau step so
    the asymptotic approach stays densely enough sampled for rate fitting.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    tau_max: float = 200.0
    horizon_eps: float = 1e-12
    h_init: float = 1e-6
    max_step: float = 0.2
    max_steps: int = 2_000_000


@dataclass(frozen=True, eq=False)
class Trajectory:
    """An integrated orbit of a desingularized field.

    taus is strictly increasing and ts nondecreasing; sample 0 is the initial
    condition, so ``len(taus) - 1`` equals the number of accepted steps.
    """

    chart: object
    dfield: DesingField
    taus: np.ndarray
    coords: np.ndarray
    ts: np.ndarray
    gaps: np.ndarray
    stop_reason: str
    n_rejected: int = 0

    @property
    def n_accepted(self) -> int:
        return len(self.taus) - 1

    @property
    def samples(self):
        """Iterate (tau, coords, t) triples."""
        return zip(self.taus, self.coords, self.ts)


def _error_norm(err, z_old, z_new, atol, rtol):
    acc = 0.0
    for e, a, b in zip(err, z_old, z_new):
        scale = atol + rtol * max(abs(a), abs(b))
        q = e / scale
        acc += q * q
    return math.sqrt(acc / len(err))


def integrate(
    dfield: DesingField,
    coords0,
    t0: float = 0.0,
    controls: Optional[IntegratorControls] = None,
) -> Trajectory:
    """Integrate dx/dtau = g(x) with physical-time reconstruction.

    ``coords0`` are chart coordinates.  For nonautonomous fields the time
    variable is coordinate 0 (t0 is ignored); for autonomous fields t is
    carried alongside the state, starting at t0, with dt/dtau equal to the
    field's time factor.

    Raises StepFailure when the adaptive step size underflows below 1e-15.
    """
    ctl = controls or IntegratorControls()
    n = dfield.n
    x0 = [float(v) for v in np.asarray(coords0, dtype=float)]
    if len(x0) != n:
        raise ValueError(f"coords0 has length {len(x0)}, expected {n}")
    nonaut = dfield.nonautonomous

    if nonaut:
        z = list(x0)

        def rhs(state):
            return list(dfield.rhs_values(state)[:-1])

        def t_of(state):
            return state[0]

    else:
        z = list(x0) + [float(t0)]

        def rhs(state):
            vals = dfield.rhs_values(state[:n])
            return list(vals[:-1]) + [vals[-1]]

        def t_of(state):
            return state[n]

    def gap_of(state):
        return dfield.horizon_gap(state[:n])

    dim = len(z)
    taus = [0.0]
    coords = [list(z[:n])]
    ts = [t_of(z)]
    gaps = [gap_of(z)]
    tau = 0.0
    n_rejected = 0

    gap = gaps[0]
    stop = None
    if not math.isfinite(gap) or any(not math.isfinite(v) for v in z):
        stop = DIVERGED
    elif gap < -_DOMAIN_SLACK:
        stop = LEFT_DOMAIN
    elif ctl.horizon_eps > 0 and gap < ctl.horizon_eps:
        stop = HORIZON_REACHED
    elif tau >= ctl.tau_max:
        stop = TAU_EXHAUSTED
    if stop is not None:
        return _mk_traj(dfield, taus, coords, ts, gaps, stop, n_rejected)

    k1 = rhs(z)
    h = min(ctl.h_init, ctl.tau_max)
    err_prev = 1e-4
    ks = [None] * 7
    steps = 0

    while True:
        steps += 1
        if steps > ctl.max_steps:
            raise StepFailure(
                f"step budget {ctl.max_steps} exhausted at tau = {tau}"
            )
        if h < _MIN_STEP:
            raise StepFailure(f"step size underflow (h = {h}) at tau = {tau}")
        capped = False
        if tau + h >= ctl.tau_max:
            h = ctl.tau_max - tau
            capped = True

        try:
            ks[0] = k1
            for s in range(1, 7):
                a = _A[s]
                zs = [
                    z[i] + h * sum(a[j] * ks[j][i] for j in range(s))
                    for i in range(dim)
                ]
                ks[s] = rhs(zs)
            z_new = zs  # stage 7 evaluates at the 5th-order solution (FSAL)
            err_vec = [
                h * sum(_E[j] * ks[j][i] for j in range(7)) for i in range(dim)
            ]
        except DomainError:
            n_rejected += 1
            h *= 0.5
            continue

        if any(not math.isfinite(v) for v in z_new):
            n_rejected += 1
            h *= 0.5
            continue

        err = _error_norm(err_vec, z, z_new, ctl.abs_tol, ctl.rel_tol)
        if not math.isfinite(err):
            n_rejected += 1
            h *= 0.5
            continue
        if err > 1.0:
            n_rejected += 1
            h *= max(0.1, min(0.9, 0.9 * err ** -0.2))
            continue

        # accepted
        tau_new = ctl.tau_max if capped else tau + h
        z = z_new
        k1 = ks[6]
        taus.append(tau_new)
        coords.append(list(z[:n]))
        ts.append(t_of(z))
        gap = gap_of(z)
        gaps.append(gap)
        tau = tau_new

        if any(abs(v) > _STATE_GUARD for v in z) or not math.isfinite(gap):
            stop = DIVERGED
        elif gap < -_DOMAIN_SLACK:
            stop = LEFT_DOMAIN
        elif ctl.horizon_eps > 0 and gap < ctl.horizon_eps:
            stop = HORIZON_REACHED
        elif tau >= ctl.tau_max - 1e-14:
            stop = TAU_EXHAUSTED
        if stop is not None:
            return _mk_traj(dfield, taus, coords, ts, gaps, stop, n_rejected)

        if err == 0.0:
            factor = 5.0
        else:
            factor = 0.9 * err ** -0.14 * err_prev ** 0.08
            factor = min(5.0, max(0.2, factor))
        h = min(h * factor, ctl.max_step)
        err_prev = max(err, 1e-10)


def _mk_traj(dfield, taus, coords, ts, gaps, stop, n_rejected) -> Trajectory:
    return Trajectory(
        chart=dfield.chart,
        dfield=dfield,
        taus=np.asarray(taus, dtype=float),
        coords=np.asarray(coords, dtype=float),
        ts=np.asarray(ts, dtype=float),
        gaps=np.asarray(gaps, dtype=float),
        stop_reason=stop,
        n_rejected=n_rejected,
    )


# --------------------------------------------------------------------------
# equilibria


@dataclass(frozen=True, eq=False)
class Equilibrium:
    """A zero of the desingularized field on the horizon.

    coords always carries the full chart coordinate vector (s = 0 in a
    directional chart, frozen values in place).  classification is computed
    on the normal directions: tangential_dims eigenvalues closest to the
    imaginary axis are structural (time slot, frozen family directions) and
    excluded.
    """

    chart: object
    coords: np.ndarray
    t_slice: Optional[float]
    residual: float
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    tangential_dims: int
    classification: str

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))
        object.__setattr__(self, "jacobian", np.asarray(self.jacobian, dtype=float))
        object.__setattr__(self, "eigenvalues", np.asarray(self.eigenvalues, dtype=complex))


@dataclass(frozen=True)
class SpectralSplit:
    """Partition of an equilibrium spectrum into tangential/stable/unstable.

    Index tuples refer to positions in ``eigenvalues``; gap is the smallest
    |Re| over non-tangential eigenvalues (0 when there are none).  An
    equilibrium counts as hyperbolic transversally only when the gap clears
    10x the neutral tolerance; otherwise nonhyperbolic is flagged rather
    than guessing.
    """

    eigenvalues: Tuple[complex, ...]
    tangential: Tuple[int, ...]
    stable: Tuple[int, ...]
    unstable: Tuple[int, ...]
    gap: float
    nonhyperbolic: bool
    classification: str


def _split_spectrum(eigenvalues: np.ndarray, tangential_dims: int) -> SpectralSplit:
    eigs = np.asarray(eigenvalues, dtype=complex)
    order = np.argsort(np.abs(eigs.real), kind="stable")
    tangential = tuple(int(i) for i in order[:tangential_dims])
    normal = [int(i) for i in order[tangential_dims:]]
    neutral_count = int(np.sum(np.abs(eigs.real) < TOL_NEUTRAL))
    stable = tuple(i for i in normal if eigs[i].real < 0)
    unstable = tuple(i for i in normal if eigs[i].real > 0)
    gap = float(min((abs(eigs[i].real) for i in normal), default=0.0))
    mismatch = neutral_count != tangential_dims
    weak = bool(normal) and gap <= 10 * TOL_NEUTRAL
    nonhyperbolic = mismatch or weak
    if nonhyperbolic or not normal:
        classification = "nonhyperbolic"
    elif stable and not unstable:
        classification = "sink"
    elif unstable and not stable:
        classification = "source"
    else:
        classification = "saddle"
    return SpectralSplit(
        eigenvalues=tuple(complex(v) for v in eigs),
        tangential=tangential,
        stable=stable,
        unstable=unstable,
        gap=gap,
        nonhyperbolic=nonhyperbolic,
        classification=classification,
    )


def spectrum_classify(eq: Equilibrium, tangential_dims: int) -> SpectralSplit:
    """Split an equilibrium's spectrum with a caller-supplied tangential count."""
    return _split_spectrum(eq.eigenvalues, tangential_dims)


def _eigvals(J: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvals(J)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"eigenvalue iteration failed: {exc}") from exc


def _gauss_newton(residual, jac, x0, max_iter=60):
    """Damped Gauss-Newton on a rectangular system; returns (x, |r|)."""
    x = np.asarray(x0, dtype=float).copy()
    try:
        r = residual(x)
    except DomainError:
        return x, math.inf
    rnorm = float(np.linalg.norm(r))
    for _ in range(max_iter):
        if rnorm < 1e-14:
            break
        try:
            J = jac(x)
        except DomainError:
            break
        delta, *_ = np.linalg.lstsq(J, -r, rcond=None)
        step = float(np.linalg.norm(delta))
        if not math.isfinite(step) or step == 0.0:
            break
        improved = False
        for _halve in range(30):
            try:
                r_new = residual(x + delta)
            except DomainError:
                delta *= 0.5
                continue
            rn = float(np.linalg.norm(r_new))
            if rn < rnorm or (rn == rnorm and step > 1e-14):
                x = x + delta
                r, rnorm = r_new, rn
                improved = True
                break
            delta *= 0.5
        if not improved:
            break
        if step < 1e-15 * (1.0 + float(np.linalg.norm(x))):
            break
    return x, rnorm


_RESIDUAL_TOL = 1e-10
_CONSTRAINT_TOL = 1e-12
_DEDUP_TOL = 1e-8


def _default_seeds(dfield: DesingField, free: Sequence[int], base: np.ndarray):
    """Grid seeds: 7 points per free axis, projected onto the horizon for
    parabolic charts via the anisotropic scaling P(r^alpha * x) = r^2c P(x)."""
    parabolic = isinstance(dfield.chart, ParabolicChart)
    axis = np.linspace(-1.05, 1.05, 7) if parabolic else np.linspace(-5.0, 5.0, 7)
    alpha = dfield.htype.alpha_array().astype(float)
    tc = 2 * dfield.htype.c
    seeds = []
    for combo in itertools.product(axis, repeat=len(free)):
        x = base.copy()
        x[list(free)] = combo
        if parabolic:
            P = float(dfield.chart.horizon_poly(x))
            if P <= 0.0:
                continue
            r = P ** (-1.0 / tc)
            x = x * r**alpha
        seeds.append(x)
    return seeds


def find_horizon_equilibria(
    dfield: DesingField,
    seeds: Optional[Iterable] = None,
    t_slice: Optional[float] = None,
    freeze: Sequence[int] = (),
) -> list:
    """Locate equilibria of g on the horizon.

    Parabolic charts solve the augmented system [g(x); P(x) - 1]; directional
    charts solve g restricted to {s = 0}.  Nonautonomous fields require
    t_slice (the frozen time value); ``freeze`` pins additional coordinates
    (e.g. a conserved variable whose value parametrizes a family) at their
    seed values.  Results are deduplicated at 1e-8 and only points meeting
    the residual contract (|g| < 1e-10, horizon constraint < 1e-12) are
    returned.
    """
    chart = dfield.chart
    parabolic = isinstance(chart, ParabolicChart)
    n = dfield.n
    frozen = set(int(i) for i in freeze)
    base = np.zeros(n)
    if dfield.nonautonomous:
        if t_slice is None:
            raise DomainError(
                "nonautonomous field: equilibrium search needs a frozen t_slice"
            )
        base[0] = float(t_slice)
        frozen.add(0)
    elif t_slice is not None:
        raise DomainError("t_slice given for an autonomous field")
    if not parabolic:
        frozen.add(chart.i0)  # s pinned to 0
        base[chart.i0] = 0.0
    free = [i for i in range(n) if i not in frozen]
    if not free:
        raise DomainError("no free coordinates left to solve for")

    if parabolic:

        def residual_full(x):
            g = dfield.g(x)
            P = chart.horizon_poly(x)
            return np.concatenate([g, [P - 1.0]])

        def jac_full(x):
            J = dfield.jacobian(x)
            gradP = chart.grad_horizon_poly(x)
            return np.vstack([J, gradP[None, :]])

    else:

        def residual_full(x):
            return dfield.g(x)

        def jac_full(x):
            return dfield.jacobian(x)

    def make_local(base_x):
        def residual(v):
            x = base_x.copy()
            x[free] = v
            return residual_full(x)

        def jac(v):
            x = base_x.copy()
            x[free] = v
            return jac_full(x)[:, free]

        return residual, jac

    if seeds is None:
        seed_list = _default_seeds(dfield, free, base)
    else:
        seed_list = []
        for s in seeds:
            x = np.asarray(s, dtype=float).copy()
            if x.shape != (n,):
                raise ValueError(f"seed shape {x.shape}, expected ({n},)")
            if dfield.nonautonomous:
                x[0] = base[0]
            if not parabolic:
                x[chart.i0] = 0.0
            seed_list.append(x)

    found = []
    for seed in seed_list:
        residual, jac = make_local(seed)
        v, rnorm = _gauss_newton(residual, jac, seed[free])
        if not math.isfinite(rnorm):
            continue
        x = seed.copy()
        x[free] = v
        g_norm = float(np.linalg.norm(dfield.g(x)))
        constraint = (
            abs(float(chart.horizon_poly(x)) - 1.0) if parabolic else 0.0
        )
        if g_norm >= _RESIDUAL_TOL or constraint >= _CONSTRAINT_TOL:
            continue
        if any(np.max(np.abs(x - y)) < _DEDUP_TOL for y in found):
            continue
        found.append(x)

    found.sort(key=lambda x: tuple(np.round(x, 10)))
    tangential_dims = (1 if dfield.nonautonomous else 0) + len(
        frozen - ({0} if dfield.nonautonomous else set())
        - ({chart.i0} if not parabolic else set())
    )
    out = []
    for x in found:
        J = dfield.jacobian(x)
        eigs = _eigvals(J)
        split = _split_spectrum(eigs, tangential_dims)
        out.append(
            Equilibrium(
                chart=chart,
                coords=x,
                t_slice=(float(base[0]) if dfield.nonautonomous else t_slice),
                residual=float(np.linalg.norm(dfield.g(x))),
                jacobian=J,
                eigenvalues=eigs,
                tangential_dims=tangential_dims,
                classification=split.classification,
            )
        )
    return out


@dataclass(frozen=True)
class EquilibriumCurve:
    """A t-parametrized branch of horizon equilibria (nonautonomous fields).

    normal_spectrum_bounds = (min, max) of normal eigenvalue real parts over
    the whole branch; the branch is hyperbolic when the interval stays on
    one side of zero.
    """

    samples: Tuple[Equilibrium, ...]
    t_values: Tuple[float, ...]
    normal_spectrum_bounds: Tuple[float, float]


def trace_equilibrium_curve(
    dfield: DesingField,
    t_range: Tuple[float, float],
    t_step: float,
    seed,
) -> EquilibriumCurve:
    """Continue a horizon equilibrium along frozen-t slices.

    The trace walks from t_range[0] to t_range[1] (descending ranges walk
    the branch downward).  Each slice reuses the previous solution as its
    seed; losing the branch (residual contract violated, a jump bigger than
    the continuation bound, or a slice on which the field itself is
    singular) raises CurveBreak with the offending t.
    """
    if not dfield.nonautonomous:
        raise DomainError("equilibrium curves require a nonautonomous field")
    t_start, t_stop = float(t_range[0]), float(t_range[1])
    if t_stop == t_start:
        raise ValueError("need a nondegenerate t_range")
    if t_step == 0:
        raise ValueError("need a nonzero t_step")
    direction = 1.0 if t_stop > t_start else -1.0
    step = direction * abs(float(t_step))
    ts = []
    t = t_start
    while direction * (t - t_stop) <= 1e-12:
        ts.append(t_stop if direction * (t - t_stop) > 0 else t)
        t += step
    if direction * (ts[-1] - t_stop) < -1e-12:  # pragma: no cover - guard
        ts.append(t_stop)

    x_prev = np.asarray(seed, dtype=float).copy()
    if x_prev.shape != (dfield.n,):
        raise ValueError(f"seed shape {x_prev.shape}, expected ({dfield.n},)")
    jump_bound = max(100.0 * abs(t_step), 1.0)
    samples = []
    for t_val in ts:
        try:
            eqs = find_horizon_equilibria(dfield, seeds=[x_prev], t_slice=t_val)
        except DomainError as exc:
            raise CurveBreak(
                f"field singular on the t = {t_val} slice: {exc}",
                t_value=t_val,
            ) from exc
        if not eqs:
            raise CurveBreak(
                f"continuation lost the branch at t = {t_val}", t_value=t_val
            )
        eq = eqs[0]
        move = float(np.max(np.abs(eq.coords[1:] - x_prev[1:])))
        if samples and move > jump_bound:
            raise CurveBreak(
                f"branch jumped by {move} at t = {t_val}", t_value=t_val
            )
        samples.append(eq)
        x_prev = eq.coords.copy()

    lo = math.inf
    hi = -math.inf
    for eq in samples:
        split = spectrum_classify(eq, eq.tangential_dims)
        for i in split.stable + split.unstable:
            re = eq.eigenvalues[i].real
            lo = min(lo, re)
            hi = max(hi, re)
    return EquilibriumCurve(
        samples=tuple(samples),
        t_values=tuple(float(v) for v in ts),
        normal_spectrum_bounds=(lo, hi),
    )


# --------------------------------------------------------------------------
# spectral conditions and decay estimation


def check_nonresonance(stable_eigs, order_N: int) -> Tuple[bool, Optional[tuple]]:
    """Sternberg-Sell nonresonance up to order 2N for a stable spectrum.

    True when every integer combination m with 2 <= |m| <= 2N keeps
    sum_j m_j lambda_j away (1e-10 relative) from zero and from every
    individual eigenvalue.  On failure returns the witness
    (m, index-or-None): the offending tuple and matched eigenvalue.
    """
    lam = [complex(v) for v in stable_eigs]
    d = len(lam)
    if d == 0:
        return True, None
    if order_N < 1:
        raise ValueError("order_N must be >= 1")
    tol = 1e-10
    top = 2 * order_N
    for m in itertools.product(range(top + 1), repeat=d):
        total = sum(m)
        if total < 2 or total > top:
            continue
        val = sum(mi * li for mi, li in zip(m, lam))
        if abs(val) <= tol * max(1.0, max(abs(li) for li in lam)):
            return False, (m, None)
        for i, li in enumerate(lam):
            if abs(val - li) <= tol * max(1.0, abs(li)):
                return False, (m, i)
    return True, None


def estimate_decay(traj: Trajectory, window: Optional[Tuple[float, float]] = None):
    """Fit the exponential decay rate of the horizon gap.

    Returns (lambda, residual_slope): lambda from a least-squares line
    through log(gap) vs tau over the window (default: the trailing stretch
    where the gap is within 1e4 of its final value), residual_slope the
    peak-to-peak drift of the fit residuals divided by the window length --
    a slope-free measure of how straight the decay really is.

    Raises InsufficientWindow with fewer than 20 usable samples.
    """
    taus = traj.taus
    gaps = traj.gaps
    pos = gaps > 0
    if window is not None:
        lo, hi = float(window[0]), float(window[1])
        mask = pos & (taus >= lo) & (taus <= hi)
    else:
        if not np.any(pos):
            raise InsufficientWindow("no positive horizon gaps to fit")
        g_end = gaps[pos][-1]
        mask = pos & (gaps <= 1e4 * g_end)
    idx = np.nonzero(mask)[0]
    if len(idx) < 20:
        raise InsufficientWindow(
            f"decay window holds {len(idx)} samples; need at least 20"
        )
    x = taus[idx]
    y = np.log(gaps[idx])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    span = float(x[-1] - x[0])
    if span <= 0:
        raise InsufficientWindow("decay window has zero length")
    residual_slope = float((resid.max() - resid.min()) / span)
    return float(-slope), residual_slope
