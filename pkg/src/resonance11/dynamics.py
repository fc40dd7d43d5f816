"""Reduced dynamics on the sphere I2^2 + I3^2 + I4^2 = r^2.

The reduced field of H is x' = 2 (x cross grad H(x)).  Everything here is
floating point; exact algebra lives in :mod:`polyalg` and :mod:`tangent`.
"""
from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Sequence

import numpy as np

from .invariants import FullFlow, ReducedPoint, hopf_lift, hopf_map
from .numeric import PolyEval
from .polyalg import Poly3
from .sphere import fibonacci_sphere, icosphere
from .transforms import CoeffSet, UnfoldingParams, build_unfolding

ON_SPHERE_TOL = 1e-9
RESIDUAL_TOL = 1e-9
MERGE_TOL = 1e-6
DEGENERATE_TOL = 1e-7
STEP_LIMIT = 0.1
DEFAULT_SEEDS = 200
LIFT_TOL = 1e-6

CENTER, SADDLE, DEGENERATE = "center", "saddle", "degenerate"


class StepSizeError(ValueError):
    """The step is too coarse for the local field strength."""


class EquilibriumError(RuntimeError):
    """No critical point was found on the sphere."""


def _as_eval(H) -> PolyEval:
    return H if isinstance(H, PolyEval) else PolyEval(H)


def _as_array(x0) -> np.ndarray:
    if isinstance(x0, ReducedPoint):
        return x0.x
    return np.asarray(x0, dtype=float).reshape(3)


def reduced_field_at(H, x) -> np.ndarray:
    """2 (x cross grad H) evaluated at points of shape (..., 3)."""
    ev = _as_eval(H)
    x = np.asarray(x, dtype=float)
    return 2.0 * np.cross(x, ev.grad_at(x))


# integration

@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray          # shape (m, 3)
    r: float

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[ReducedPoint]:
        for row in self.x:
            yield ReducedPoint(float(row[0]), float(row[1]), float(row[2]), self.r)

    def points(self) -> list[ReducedPoint]:
        return list(self)

    def radius_drift(self) -> float:
        return float(np.abs(np.linalg.norm(self.x, axis=1) - self.r).max())

    def energy_drift(self, H) -> float:
        """max |H(x_t) - H(x_0)| / (1 + |H(x_0)|)."""
        e = _as_eval(H).value_at(self.x)
        return float(np.abs(e - e[0]).max() / (1.0 + abs(e[0])))


def integrate(H, x0, T: float, dt: float, stride: int = 1) -> Trajectory:
    """RK4 on the reduced field with radial projection after every step.

    Every ``stride``-th state is kept, plus the last one.  Raises
    StepSizeError when dt * |field| exceeds 0.1 r anywhere along the run.
    """
    if dt <= 0 or T < 0:
        raise ValueError("need dt > 0 and T >= 0")
    x = _as_array(x0)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise ValueError("x0 must lie on a sphere of positive radius")
    if isinstance(x0, ReducedPoint) and abs(r - x0.r) > ON_SPHERE_TOL * x0.r:
        raise ValueError("x0 is not on the sphere of its radius")
    if isinstance(x0, ReducedPoint):
        r = x0.r
    grad = _as_eval(H).grad
    limit = STEP_LIMIT * r
    n = max(int(math.ceil(T / dt - 1e-9)), 0)
    last = T - (n - 1) * dt if n else 0.0

    def f(a, b, c):
        g2, g3, g4 = grad(a, b, c)
        return 2.0 * (b * g4 - c * g3), 2.0 * (c * g2 - a * g4), 2.0 * (a * g3 - b * g2)

    a, b, c = (float(v) * r / float(np.linalg.norm(x)) for v in x)
    ts, xs = [0.0], [(a, b, c)]
    for k in range(1, n + 1):
        # the final step is shortened so the run ends exactly at T
        h = dt if k < n else last
        h2 = 0.5 * h
        k1 = f(a, b, c)
        if dt * math.sqrt(k1[0] ** 2 + k1[1] ** 2 + k1[2] ** 2) > limit:
            raise StepSizeError(f"dt*|field| exceeds {STEP_LIMIT}*r at t={(k - 1) * dt:.6g}")
        k2 = f(a + h2 * k1[0], b + h2 * k1[1], c + h2 * k1[2])
        k3 = f(a + h2 * k2[0], b + h2 * k2[1], c + h2 * k2[2])
        k4 = f(a + h * k3[0], b + h * k3[1], c + h * k3[2])
        h6 = h / 6.0
        a += h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        b += h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        c += h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        s = r / math.sqrt(a * a + b * b + c * c)
        a, b, c = a * s, b * s, c * s
        if k % stride == 0 or k == n:
            ts.append(T if k == n else k * dt)
            xs.append((a, b, c))
    return Trajectory(np.array(ts), np.array(xs), r)


# equilibria

@dataclass(frozen=True)
class EquilibriumRecord:
    point: ReducedPoint
    multiplier: float
    type: str
    energy: float
    eigenvalues: tuple[complex, complex]
    residual: float = 0.0

    def to_json(self) -> dict:
        return {
            "point": [self.point.x2, self.point.x3, self.point.x4],
            "r": self.point.r,
            "multiplier": self.multiplier,
            "type": self.type,
            "energy": self.energy,
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "residual": self.residual,
        }


def _tangent_frame(x: np.ndarray) -> np.ndarray:
    u = x / np.linalg.norm(x)
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(u)))] = 1.0
    e1 = np.cross(u, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(u, e1)
    return np.stack([e1, e2], axis=1)


def _skew(v) -> np.ndarray:
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def linearization(H, x) -> tuple[np.ndarray, float]:
    """Differential of the reduced field restricted to the tangent plane at x.

    Returns the 2x2 matrix and the scale used for the degeneracy band.
    """
    ev = _as_eval(H)
    x = np.asarray(x, dtype=float)
    g = np.array(ev.grad(*x), dtype=float)
    hess = np.array(ev.hess(*x), dtype=float).reshape(3, 3)
    df = 2.0 * (_skew(x) @ hess - _skew(g))
    E = _tangent_frame(x)
    return E.T @ df @ E, max(1.0, float(np.abs(df).max()))


def classify(H, e: EquilibriumRecord) -> EquilibriumRecord:
    m, scale = linearization(H, e.point.x)
    ev = np.linalg.eigvals(m).astype(complex)
    ev = tuple(sorted(ev, key=lambda z: (z.imag, z.real)))
    tol = DEGENERATE_TOL * scale
    if min(abs(z) for z in ev) < tol:
        kind = DEGENERATE
    elif all(abs(z.real) <= tol for z in ev):
        kind = CENTER
    elif all(abs(z.imag) <= tol for z in ev):
        kind = SADDLE
    else:
        kind = DEGENERATE
    return replace(e, type=kind, eigenvalues=ev)


def _newton(ev: PolyEval, x: np.ndarray, r: float, iters: int) -> tuple[np.ndarray, np.ndarray]:
    """Batched Newton on (grad H - lam x, (|x|^2 - r^2) / 2)."""
    lam = np.einsum("ij,ij->i", x, ev.grad_at(x)) / (r * r)
    eye = np.eye(3)
    for _ in range(iters):
        g = ev.grad_at(x)
        hs = ev.hess_at(x)
        F = np.concatenate([g - lam[:, None] * x, 0.5 * (np.einsum("ij,ij->i", x, x) - r * r)[:, None]], axis=1)
        J = np.zeros((len(x), 4, 4))
        J[:, :3, :3] = hs - lam[:, None, None] * eye
        J[:, :3, 3] = -x
        J[:, 3, :3] = x
        step = np.einsum("nij,nj->ni", np.linalg.pinv(J), F)
        # cap the move along the sphere so far seeds do not jump across it
        size = np.linalg.norm(step[:, :3], axis=1)
        damp = np.minimum(1.0, 0.5 * r / np.maximum(size, 1e-300))
        x = x - damp[:, None] * step[:, :3]
        lam = lam - damp * step[:, 3]
        if not np.all(np.isfinite(x)):
            bad = ~np.all(np.isfinite(x), axis=1)
            x[bad] = r
            lam[bad] = 0.0
    return x, lam


def find_equilibria(H, r: float, seeds: int = DEFAULT_SEEDS, iters: int = 100) -> list[EquilibriumRecord]:
    """Critical points of H on the sphere of radius r, classified.

    Newton is started from ``seeds`` Fibonacci points; non-convergent seeds
    are dropped and duplicates within 1e-6 r merged.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    ev = _as_eval(H)
    x, _ = _newton(ev, fibonacci_sphere(seeds, r), r, iters)
    x = x[np.all(np.isfinite(x), axis=1)]
    norms = np.linalg.norm(x, axis=1)
    x = x[norms > 0.5 * r]
    x = r * x / np.linalg.norm(x, axis=1, keepdims=True)
    g = ev.grad_at(x)
    lam = np.einsum("ij,ij->i", x, g) / (r * r)
    res = np.linalg.norm(g - lam[:, None] * x, axis=1)
    ok = res <= RESIDUAL_TOL * (1.0 + np.linalg.norm(g, axis=1))
    found: list[int] = []
    for i in np.flatnonzero(ok)[np.argsort(res[ok], kind="stable")]:
        if all(np.linalg.norm(x[i] - x[j]) > MERGE_TOL * r for j in found):
            found.append(int(i))
    if not found:
        raise EquilibriumError("no equilibrium converged; a smooth function on the sphere has at least two")
    out = []
    for i in sorted(found, key=lambda k: tuple(np.round(x[k] / r, 9))):
        p = ReducedPoint(float(x[i, 0]), float(x[i, 1]), float(x[i, 2]), r)
        rec = EquilibriumRecord(p, float(lam[i]), DEGENERATE, float(ev.value(*x[i])), (0j, 0j), float(res[i]))
        out.append(classify(ev, rec))
    return out


def type_counts(eqs: Sequence[EquilibriumRecord]) -> dict[str, int]:
    c = Counter(e.type for e in eqs)
    return {k: c.get(k, 0) for k in (CENTER, SADDLE, DEGENERATE)}


def index_sum(eqs: Sequence[EquilibriumRecord]) -> int:
    """centers - saddles; equals 2 on the sphere when nothing is degenerate."""
    c = type_counts(eqs)
    return c[CENTER] - c[SADDLE]


# level curves

@dataclass
class LevelSet:
    h: float
    curves: list[np.ndarray]     # each (m, 3), first vertex not repeated
    closed: list[bool]
    max_level_error: float
    max_radial_error: float

    def __len__(self) -> int:
        return len(self.curves)


def level_curves(H, r: float, h: float, depth: int = 5) -> LevelSet:
    """Curves H = h on the sphere by marching triangles on an icosphere.

    Crossings are linearly interpolated along mesh edges and then projected
    radially onto the sphere.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    ev = _as_eval(H)
    V, F = icosphere(depth)
    P = r * V
    vals = ev.value_at(P) - h
    pos = vals >= 0
    sp = pos[F]
    mixed = np.flatnonzero(sp.any(axis=1) & ~sp.all(axis=1))
    if len(mixed) == 0:
        return LevelSet(h, [], [], 0.0, 0.0)

    def key(i: int, j: int) -> tuple[int, int]:
        return (i, j) if i < j else (j, i)

    links: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for fi in mixed:
        a, b, c = (int(v) for v in F[fi])
        cut = [key(u, w) for u, w in ((a, b), (b, c), (c, a)) if pos[u] != pos[w]]
        e1, e2 = cut
        links.setdefault(e1, []).append(e2)
        links.setdefault(e2, []).append(e1)

    def point(e: tuple[int, int]) -> np.ndarray:
        i, j = e
        t = vals[i] / (vals[i] - vals[j])
        p = P[i] + t * (P[j] - P[i])
        return r * p / np.linalg.norm(p)

    seen: set[tuple[int, int]] = set()
    curves, closed = [], []
    for start in sorted(links):
        if start in seen:
            continue
        chain = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [e for e in links[cur] if e != prev]
            nxt = [e for e in nxt if e not in seen] or nxt
            if not nxt:
                break
            e = nxt[0]
            if e == start:
                break
            if e in seen:
                break
            seen.add(e)
            chain.append(e)
            prev, cur = cur, e
        curves.append(np.array([point(e) for e in chain]))
        closed.append(start in links[chain[-1]] and len(chain) > 2)
    allp = np.concatenate(curves)
    lvl = float(np.abs(ev.value_at(allp) - h).max())
    rad = float(np.abs(np.linalg.norm(allp, axis=1) - r).max())
    return LevelSet(h, curves, closed, lvl, rad)


def default_levels(eqs: Sequence[EquilibriumRecord], n: int) -> list[float]:
    """n levels evenly spread strictly inside the range of H on the sphere."""
    lo = min(e.energy for e in eqs)
    hi = max(e.energy for e in eqs)
    return [lo + (k + 0.5) * (hi - lo) / n for k in range(n)]


# scans

@dataclass(frozen=True)
class LinearPath:
    start: tuple[float, ...]
    end: tuple[float, ...]

    def __post_init__(self):
        if len(self.start) != 5 or len(self.end) != 5:
            raise ValueError("path endpoints need five mu entries")

    def __call__(self, t: float) -> tuple[float, ...]:
        return tuple(s + t * (e - s) for s, e in zip(self.start, self.end))


@dataclass(frozen=True)
class ScanEvent:
    t_lo: float
    t_hi: float
    count_before: int
    count_after: int
    types_before: dict
    types_after: dict

    def to_json(self) -> dict:
        return {"t_lo": self.t_lo, "t_hi": self.t_hi,
                "count_before": self.count_before, "count_after": self.count_after,
                "types_before": self.types_before, "types_after": self.types_after}


@dataclass
class ScanResult:
    ts: list[float]
    mus: list[tuple[float, ...]]
    counts: list[int]
    types: list[dict]
    events: list[ScanEvent] = field(default_factory=list)

    def nondegenerate(self, k: int) -> bool:
        return self.types[k][DEGENERATE] == 0

    def index_sums(self) -> list[int]:
        return [t[CENTER] - t[SADDLE] for t in self.types]

    def to_json(self) -> dict:
        return {
            "samples": [{"t": t, "mu": list(m), "count": n, "types": ty}
                        for t, m, n, ty in zip(self.ts, self.mus, self.counts, self.types)],
            "events": [e.to_json() for e in self.events],
        }


Signature = tuple[int, tuple[int, int, int]]


def _signature(eqs) -> Signature:
    c = type_counts(eqs)
    return len(eqs), (c[CENTER], c[SADDLE], c[DEGENERATE])


def _types(sig: Signature) -> dict:
    return dict(zip((CENTER, SADDLE, DEGENERATE), sig[1]))


def _sample(args) -> Signature:
    c, mu, r, seeds = args
    H, _ = build_unfolding(c, UnfoldingParams(*mu), require_diagonal=False)
    return _signature(find_equilibria(H, r, seeds))


def scan(c: CoeffSet, mu_path: Callable[[float], Sequence[float]], r: float = 1.0,
         samples: int = 101, tol: float = 1e-4, seeds: int = DEFAULT_SEEDS, jobs: int = 1) -> ScanResult:
    """Equilibrium counts and types along mu_path(t), t in [0, 1].

    Changes between neighbouring samples are localized by bisection to a
    path-parameter width of ``tol``.  Two events meeting at a sample that
    itself carries a degenerate equilibrium are reported as one.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    ts = [k / (samples - 1) for k in range(samples)]
    mus = [tuple(float(v) for v in mu_path(t)) for t in ts]
    work = [(c, m, r, seeds) for m in mus]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            sigs = list(pool.map(_sample, work))
    else:
        sigs = [_sample(w) for w in work]

    def sig_at(t: float) -> Signature:
        return _sample((c, tuple(float(v) for v in mu_path(t)), r, seeds))

    # half width, so two pieces merged across a degenerate sample still fit in tol
    width = 0.5 * tol

    def localize(lo, s_lo, hi, s_hi) -> list[ScanEvent]:
        s_hi_orig, hi_orig = s_hi, hi
        while hi - lo > width:
            mid = 0.5 * (lo + hi)
            s_mid = sig_at(mid)
            if s_mid == s_lo:
                lo = mid
            else:
                hi, s_hi = mid, s_mid
        ev = ScanEvent(lo, hi, s_lo[0], s_hi[0], _types(s_lo), _types(s_hi))
        if s_hi != s_hi_orig:
            return [ev] + localize(hi, s_hi, hi_orig, s_hi_orig)
        return [ev]

    raw: list[tuple[int, ScanEvent]] = []
    for k in range(samples - 1):
        if sigs[k] != sigs[k + 1]:
            raw += [(k, e) for e in localize(ts[k], sigs[k], ts[k + 1], sigs[k + 1])]
    events: list[ScanEvent] = []
    for k, e in raw:
        if events and events[-1].t_hi == e.t_lo == ts[k] and sigs[k][1][2] > 0:
            p = events.pop()
            e = ScanEvent(p.t_lo, e.t_hi, p.count_before, e.count_after, p.types_before, e.types_after)
        events.append(e)
    return ScanResult(ts, mus, [s[0] for s in sigs], [_types(s) for s in sigs], events)


# periodic orbits through the lift

@dataclass(frozen=True)
class LiftReport:
    passed: bool
    drift: float           # max |(I2, I3, I4)(z_t) - x_e| / h2
    bound: float
    period: float          # fiber period, inf when the lifted point is itself fixed
    duration: float
    steps: int
    closure: float         # |z(period) - z(0)| / |z(0)|, 0 for a fixed point
    energy_drift: float

    def to_json(self) -> dict:
        return {"passed": self.passed, "drift": self.drift, "bound": self.bound,
                "period": self.period if math.isfinite(self.period) else None,
                "duration": self.duration, "steps": self.steps,
                "closure": self.closure, "energy_drift": self.energy_drift}


# roundoff grows like exp(sigma t) near a saddle; stop before it reaches the bound
_GROWTH_BUDGET = math.log(1e-6 / 1e-15)


def periodic_orbit_check(H: Poly3, e, h2: float, periods: float = 3.0,
                         steps_per_period: int = 4000, bound: float = LIFT_TOL) -> LiftReport:
    """Lift a reduced equilibrium and follow the full flow of I1 + H.

    The run covers ``periods`` fiber periods, shortened (never below one
    period) when the reduced linearization is hyperbolic enough that
    roundoff alone would be amplified past the bound.  ``e`` may also be a
    bare ReducedPoint, which is handy as a negative control.
    """
    p = e.point if isinstance(e, EquilibriumRecord) else e
    x = p.x
    if abs(float(np.linalg.norm(x)) - h2) > ON_SPHERE_TOL * h2:
        raise ValueError("point is not on the sphere of radius h2")
    flow = FullFlow(H, include_h2=True)
    z0 = np.array(hopf_lift((h2, *x)), dtype=float)
    speed = float(np.linalg.norm(flow(z0)))
    omega = speed / float(np.linalg.norm(z0))
    if omega > 1e-9:
        period = 2 * math.pi / omega
        base = period
    else:
        period = math.inf
        base = 2 * math.pi
    m, _ = linearization(H, x)
    sigma = float(max(np.linalg.eigvals(m).real.max(), 0.0))
    run = periods
    if sigma > 0:
        run = min(periods, max(1.0, _GROWTH_BUDGET / (sigma * base)))
    n = int(math.ceil(run * steps_per_period))
    dt = base / steps_per_period
    z = z0.copy()
    e0 = flow.energy(z)
    drift = edrift = 0.0
    closure = 0.0
    for k in range(1, n + 1):
        k1 = flow(z)
        k2 = flow(z + 0.5 * dt * k1)
        k3 = flow(z + 0.5 * dt * k2)
        k4 = flow(z + dt * k3)
        z = z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        inv = hopf_map(z)
        drift = max(drift, float(np.linalg.norm(np.array(inv.reduced) - x)) / h2)
        edrift = max(edrift, abs(flow.energy(z) - e0))
        if k == steps_per_period:
            closure = float(np.linalg.norm(z - z0) / np.linalg.norm(z0))
    return LiftReport(drift <= bound, drift, bound, period, n * dt, n, closure, edrift)
