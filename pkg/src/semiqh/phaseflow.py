"""Numerical ground truth: trajectories, the return map on {y = 0, x > 0},
limit-cycle search, center detection and portrait export.

Integration uses scipy's DOP853 (embedded 8(5,3) pair with dense output).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

log = logging.getLogger(__name__)

Term = tuple[float, int, int]


class FlowError(RuntimeError):
    """Numerical failure on a path where a clean answer was expected."""


class StepLimitExceeded(FlowError):
    pass


class Blowup(FlowError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class NoReturn(FlowError):
    """The orbit did not come back to the section."""


@dataclass(frozen=True)
class FlowConfig:
    rtol: float = 1e-12
    atol: float = 1e-14
    blowup: float = 1e6
    max_evals: int = 2_000_000
    t_max: float = 1e5
    r_min_factor: float = 1e-6

    def __post_init__(self):
        if not (1e-13 <= self.rtol < 1):
            raise ValueError(f"rtol must lie in [1e-13, 1), got {self.rtol}")
        if not (0 < self.atol < 1):
            raise ValueError(f"atol must lie in (0, 1), got {self.atol}")


DEFAULT = FlowConfig()


def _eval_terms(terms: Sequence[Term], x: float, y: float) -> float:
    s = 0.0
    for c, i, j in terms:
        s += c * x**i * y**j
    return s


@dataclass(frozen=True)
class VectorField:
    """Polynomial field  x' = P(x, y),  y' = Q(x, y)  with float coefficients.

    ``level`` optionally names (l1, l2) of the reference Hamiltonian
    l1 x^(2 l2) + l2 y^(2 l1), used to convert section points to radii.
    """

    P: tuple[Term, ...]
    Q: tuple[Term, ...]
    level: tuple[int, int] | None = None
    label: str = ""

    @classmethod
    def from_polynomials(cls, P, Q, level=None, label="") -> "VectorField":
        return cls(tuple(P.float_terms()), tuple(Q.float_terms()), level, label)

    @classmethod
    def from_callables(cls, terms_P, terms_Q, **kw) -> "VectorField":
        return cls(tuple(map(tuple, terms_P)), tuple(map(tuple, terms_Q)), **kw)

    def rate(self, x: float, y: float) -> tuple[float, float]:
        return _eval_terms(self.P, x, y), _eval_terms(self.Q, x, y)

    def __call__(self, t, u):
        x, y = u[0], u[1]
        return [_eval_terms(self.P, x, y), _eval_terms(self.Q, x, y)]

    def scaled(self, c: float) -> "VectorField":
        return VectorField(tuple((c * a, i, j) for a, i, j in self.P),
                           tuple((c * a, i, j) for a, i, j in self.Q), self.level, self.label)

    def rho(self, x: float, y: float = 0.0) -> float | None:
        if self.level is None:
            return None
        l1, l2 = self.level
        h = l1 * x ** (2 * l2) + l2 * y ** (2 * l1)
        return h ** (1.0 / (2 * l1 * l2))


class _Counted:
    def __init__(self, f, limit):
        self.f = f
        self.limit = limit
        self.count = 0

    def __call__(self, t, u):
        self.count += 1
        if self.count > self.limit:
            raise StepLimitExceeded(f"more than {self.limit} right-hand-side evaluations")
        return self.f(t, u)


@dataclass
class Trace:
    samples: np.ndarray                      # rows (t, x, y)
    tolerances: tuple[float, float]
    events: list[tuple[float, float, float]] = field(default_factory=list)  # (t, x, y) on y=0, x>0

    @property
    def t(self):
        return self.samples[:, 0]

    @property
    def xy(self):
        return self.samples[:, 1:]


def _event(fn, terminal=False, direction=0.0):
    fn.terminal = terminal
    fn.direction = direction
    return fn


def _polish_crossing(sol, t_ev, tol=1e-10):
    """Refine a y = 0 crossing on the dense output until |y| <= tol."""
    x, y = sol(t_ev)
    if abs(y) <= tol:
        return t_ev, float(x), float(y)
    h = 1e-6 * max(1.0, abs(t_ev))
    lo, hi = t_ev - h, t_ev + h
    if sol(lo)[1] * sol(hi)[1] < 0:
        t_ev = brentq(lambda s: sol(s)[1], lo, hi, xtol=1e-15, rtol=1e-15)
        x, y = sol(t_ev)
    return t_ev, float(x), float(y)


def integrate(vf: VectorField, x0: float, y0: float, t_end: float,
              tol: tuple[float, float] | None = None, cfg: FlowConfig = DEFAULT) -> Trace:
    """Integrate from (x0, y0) to t_end (negative for backward time).

    Raises ``Blowup`` (carrying the partial trace) when the state norm
    reaches ``cfg.blowup``.
    """
    if not (math.isfinite(x0) and math.isfinite(y0) and math.isfinite(t_end)):
        raise ValueError("initial data must be finite")
    rtol, atol = tol if tol is not None else (cfg.rtol, cfg.atol)
    FlowConfig(rtol=rtol, atol=atol)  # range check
    f = _Counted(vf, cfg.max_evals)
    section = _event(lambda t, u: u[1])
    escape = _event(lambda t, u: math.hypot(u[0], u[1]) - cfg.blowup, terminal=True)
    sol = solve_ivp(f, (0.0, t_end), [x0, y0], method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True, events=[section, escape])
    samples = np.column_stack([sol.t, sol.y[0], sol.y[1]])
    events = []
    for t_ev in sol.t_events[0]:
        if t_ev == 0.0:
            continue
        t_ev, x, y = _polish_crossing(sol.sol, t_ev)
        if x > 0:
            events.append((t_ev, x, y))
    trace = Trace(samples, (rtol, atol), events)
    if sol.status == 1 and len(sol.t_events[1]):
        raise Blowup(f"state norm reached {cfg.blowup:g} at t={sol.t_events[1][0]:.6g}", trace)
    if sol.status == -1:
        if math.hypot(sol.y[0, -1], sol.y[1, -1]) > 1e3:
            raise Blowup(f"integration broke down near blow-up: {sol.message}", trace)
        raise StepLimitExceeded(sol.message)
    return trace


@dataclass(frozen=True)
class ReturnMapSample:
    x_in: float
    x_out: float
    turns: int = 1
    period: float = float("nan")
    monotone: bool = True

    @property
    def displacement(self) -> float:
        return self.x_out - self.x_in


def _leg(f, u0, direction, r_min, r_max, cfg, atol, keep):
    cross = _event(lambda t, u: u[1], terminal=True, direction=direction)
    outer = _event(lambda t, u: math.hypot(u[0], u[1]) - r_max, terminal=True)
    inner = _event(lambda t, u: math.hypot(u[0], u[1]) - r_min, terminal=True)
    sol = solve_ivp(f, (0.0, cfg.t_max), u0, method="DOP853", rtol=cfg.rtol, atol=atol,
                    events=[cross, outer, inner], dense_output=keep)
    if sol.status == -1:
        raise NoReturn(f"integration failed: {sol.message}")
    if len(sol.t_events[1]) or len(sol.t_events[2]):
        raise NoReturn("orbit left the annulus")
    if not len(sol.t_events[0]):
        raise NoReturn(f"no section crossing before t={cfg.t_max:g}")
    return sol


def _revolve(vf: VectorField, x_in: float, cfg: FlowConfig, keep: bool = False):
    if not (x_in > 0 and math.isfinite(x_in)):
        raise ValueError("x_in must be a positive finite number")
    _, q0 = vf.rate(x_in, 0.0)
    if q0 == 0.0:
        raise NoReturn("start point lies on an invariant part of the section")
    s0 = math.copysign(1.0, q0)
    atol = cfg.atol * min(1.0, x_in)
    r_min = cfg.r_min_factor * x_in
    f = _Counted(vf, cfg.max_evals)
    try:
        first = _leg(f, [x_in, 0.0], -s0, r_min, cfg.blowup, cfg, atol, keep)
        x_half = first.y_events[0][0][0]
        if x_half >= 0:
            raise NoReturn("orbit recrossed the positive half axis backwards")
        second = _leg(f, [x_half, 0.0], s0, r_min, cfg.blowup, cfg, atol, keep)
    except StepLimitExceeded as exc:
        raise NoReturn(str(exc)) from exc
    x_out = second.y_events[0][0][0]
    if x_out <= 0:
        raise NoReturn("orbit did not return to the positive half axis")
    xs = np.concatenate([first.y[0], second.y[0]])
    ys = np.concatenate([first.y[1], second.y[1]])
    w = np.array([x * vf.rate(x, y)[1] - y * vf.rate(x, y)[0] for x, y in zip(xs, ys)])
    monotone = bool(np.all(w >= 0) or np.all(w <= 0))
    period = first.t_events[0][0] + second.t_events[0][0]
    sample = ReturnMapSample(x_in, float(x_out), 1, float(period), monotone)
    if not keep:
        return sample, None
    t1 = np.linspace(0, first.t_events[0][0], 200)
    t2 = np.linspace(0, second.t_events[0][0], 200)[1:]
    pts = np.vstack([first.sol(t1).T, second.sol(t2).T])
    tt = np.concatenate([t1, first.t_events[0][0] + t2])
    return sample, Trace(np.column_stack([tt, pts]), (cfg.rtol, atol), [])


def return_map(vf: VectorField, x_in: float, cfg: FlowConfig = DEFAULT) -> ReturnMapSample:
    """First return of (x_in, 0) to the positive x half axis."""
    return _revolve(vf, x_in, cfg)[0]


def orbit(vf: VectorField, x_in: float, cfg: FlowConfig = DEFAULT) -> Trace:
    """One revolution starting at (x_in, 0), densely sampled."""
    return _revolve(vf, x_in, cfg, keep=True)[1]


@dataclass(frozen=True)
class LimitCycleEstimate:
    x_fixed: float
    rho_equiv: float | None
    stability: str          # "Attracting" | "Repelling" | "Unknown"
    residual: float


@dataclass
class CycleSearch:
    cycles: list[LimitCycleEstimate]
    samples: list[tuple[float, float | None]]   # (x, displacement or None if NoReturn)
    skipped: int

    def __len__(self):
        return len(self.cycles)

    def __iter__(self):
        return iter(self.cycles)


def find_limit_cycles(vf: VectorField, x_lo: float, x_hi: float, grid: int = 24,
                      cfg: FlowConfig = DEFAULT) -> CycleSearch:
    """Bracket sign changes of d(x) = return(x) - x on a geometric grid."""
    if not (0 < x_lo < x_hi):
        raise ValueError("need 0 < x_lo < x_hi")
    if grid < 8:
        raise ValueError("grid must be at least 8")

    def d(x):
        return return_map(vf, x, cfg).displacement

    samples: list[tuple[float, float | None]] = []
    skipped = 0
    for x in np.geomspace(x_lo, x_hi, grid):
        try:
            samples.append((float(x), d(float(x))))
        except NoReturn as exc:
            skipped += 1
            samples.append((float(x), None))
            log.debug("no return from x=%g: %s", x, exc)
    if skipped:
        log.warning("%d of %d section samples had no return", skipped, grid)

    cycles: list[LimitCycleEstimate] = []
    for (x1, d1), (x2, d2) in zip(samples, samples[1:]):
        if d1 is None or d2 is None:
            continue
        if d1 == 0.0:
            root = x1
        elif d1 * d2 < 0:
            root = brentq(d, x1, x2, xtol=1e-13 * x1, rtol=1e-15)
        else:
            continue
        if d1 > 0 > d2:
            stability = "Attracting"
        elif d1 < 0 < d2:
            stability = "Repelling"
        else:
            stability = "Unknown"
        res = abs(d(root))
        if cycles and abs(root - cycles[-1].x_fixed) <= 1e-6 * root:
            continue
        cycles.append(LimitCycleEstimate(float(root), vf.rho(root), stability, float(res)))
    return CycleSearch(cycles, samples, skipped)


@dataclass(frozen=True)
class CenterScan:
    xs: tuple[float, ...]
    rel_displacements: tuple[float, ...]

    @property
    def max_rel(self) -> float:
        return max(abs(v) for v in self.rel_displacements)

    @property
    def sign(self) -> int:
        """Common sign of the displacements, 0 when mixed."""
        signs = {int(np.sign(v)) for v in self.rel_displacements}
        return signs.pop() if len(signs) == 1 else 0


def center_scan(vf: VectorField, x_lo: float, x_hi: float, samples: int = 8,
                cfg: FlowConfig = DEFAULT) -> CenterScan:
    xs = tuple(float(x) for x in np.geomspace(x_lo, x_hi, samples)) if samples > 1 else (float(x_lo),)
    rel = tuple(return_map(vf, x, cfg).displacement / x for x in xs)
    return CenterScan(xs, rel)


def detect_center(vf: VectorField, x_lo: float, x_hi: float, samples: int = 8,
                  tol: float = 1e-8, cfg: FlowConfig = DEFAULT) -> bool:
    return center_scan(vf, x_lo, x_hi, samples, cfg).max_rel <= tol


@dataclass(frozen=True)
class RaySurvey:
    kind: str
    forward_in: int
    backward_in: int
    rays: int


def _ray_fate(vf, u0, t_span, r_in, r_out, cfg):
    inner = _event(lambda t, u: math.hypot(u[0], u[1]) - r_in, terminal=True)
    outer = _event(lambda t, u: math.hypot(u[0], u[1]) - r_out, terminal=True)
    try:
        sol = solve_ivp(_Counted(vf, cfg.max_evals), t_span, u0, method="DOP853",
                        rtol=1e-10, atol=1e-14, events=[inner, outer])
    except StepLimitExceeded:
        return "none"
    if len(sol.t_events[0]):
        return "in"
    if len(sol.t_events[1]) or sol.status == -1:
        return "out"
    return "none"


def survey_rays(vf: VectorField, radius: float = 0.05, rays: int = 24, t_max: float = 5e4,
                cfg: FlowConfig = DEFAULT) -> RaySurvey:
    """Classify the origin by where orbits from a small circle go.

    A ray converges in a time direction when it reaches an eighth of the
    starting radius before leaving four times it. Rays near a separatrix
    can creep in along a slow direction, so a sector only counts as
    parabolic when it holds at least a third of the rays.
    """
    fwd = bwd = 0
    for k in range(rays):
        th = 2 * math.pi * (k + 0.5) / rays
        u0 = [radius * math.cos(th), radius * math.sin(th)]
        fwd += _ray_fate(vf, u0, (0.0, t_max), radius / 8, 4 * radius, cfg) == "in"
        bwd += _ray_fate(vf, u0, (0.0, -t_max), radius / 8, 4 * radius, cfg) == "in"
    big_f, big_b = 3 * fwd >= rays, 3 * bwd >= rays
    if bwd == rays and fwd == 0:
        kind = "UnstableNode"
    elif fwd == rays and bwd == 0:
        kind = "StableNode"
    elif not big_f and not big_b:
        kind = "TopologicalSaddle"
    elif big_f != big_b:
        kind = "SaddleNode"
    else:
        kind = "Unknown"
    return RaySurvey(kind, fwd, bwd, rays)


def simulate_local_type(vf: VectorField, radius: float = 0.05, rays: int = 24,
                        cfg: FlowConfig = DEFAULT) -> str:
    """Simulation-only local type: rotation first, then the ray survey."""
    try:
        scan = center_scan(vf, radius / 4, radius, 4, cfg)
    except NoReturn:
        return survey_rays(vf, radius, rays, cfg=cfg).kind
    return "Center" if scan.max_rel <= 1e-8 else "Focus"


# -- export ------------------------------------------------------------------

def export_portrait(traces: Sequence[Trace], path, svg_path=None,
                    cycles: Sequence[Trace] = (), size: int = 480) -> None:
    """CSV of (t, x, y, trace_id); optionally an SVG with cycles overlaid."""
    if not traces:
        raise ValueError("no traces to export")
    with open(path, "w") as fh:
        fh.write("t,x,y,trace_id\n")
        for k, tr in enumerate(traces):
            for t, x, y in tr.samples:
                fh.write(f"{t:.17g},{x:.17g},{y:.17g},{k}\n")
    if svg_path is None:
        return
    pts = np.vstack([tr.xy for tr in list(traces) + list(cycles)])
    span = float(np.max(np.abs(pts))) or 1.0
    scale = (size / 2 - 10) / span

    def coords(xy):
        return " ".join(f"{size / 2 + scale * x:.2f},{size / 2 - scale * y:.2f}" for x, y in xy)

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             f'<line x1="0" y1="{size / 2}" x2="{size}" y2="{size / 2}" stroke="#ccc"/>',
             f'<line x1="{size / 2}" y1="0" x2="{size / 2}" y2="{size}" stroke="#ccc"/>']
    for tr in traces:
        lines.append(f'<polyline class="orbit" fill="none" stroke="#36c" stroke-width="0.8" '
                     f'points="{coords(tr.xy)}"/>')
    for cy in cycles:
        lines.append(f'<polygon class="cycle" fill="none" stroke="#c33" stroke-width="1.6" '
                     f'points="{coords(cy.xy)}"/>')
    lines.append("</svg>")
    with open(svg_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
