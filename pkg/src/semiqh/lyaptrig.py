"""Lyapunov (l1, l2)-trigonometric functions Cs, Sn and their moments.

Cs and Sn solve  z' = -w^(2 l1 - 1),  w' = z^(2 l2 - 1)  with
z(0) = l1^(-1/(2 l2)), w(0) = 0.  They are evaluated from a dense DOP853
solution on a quarter period; the rest of the period follows from the
symmetries  Cs(-t) = Cs(t), Sn(-t) = -Sn(t), Cs(T/2 - t) = -Cs(t),
Sn(T/2 - t) = Sn(t).
"""
from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

RTOL = 1e-13
ATOL = 1e-15


@dataclass(frozen=True)
class TrigParams:
    l1: int
    l2: int

    def __post_init__(self):
        if int(self.l1) != self.l1 or int(self.l2) != self.l2 or self.l1 < 1 or self.l2 < 1:
            raise ValueError(f"l1, l2 must be positive integers, got ({self.l1}, {self.l2})")

    @property
    def cs0(self) -> float:
        return self.l1 ** (-1.0 / (2 * self.l2))


def period(t: TrigParams) -> float:
    a = 1.0 / (2 * t.l1)
    b = 1.0 / (2 * t.l2)
    return 2.0 * t.l1 ** (-b) * t.l2 ** (-a) * math.gamma(a) * math.gamma(b) / math.gamma(a + b)


def _rhs(l1: int, l2: int):
    e1, e2 = 2 * l1 - 1, 2 * l2 - 1

    def f(_, u):
        return [-u[1] ** e1, u[0] ** e2]

    return f


@lru_cache(maxsize=64)
def _quarter(t: TrigParams):
    quarter = period(t) / 4.0
    sol = solve_ivp(_rhs(t.l1, t.l2), (0.0, quarter), [t.cs0, 0.0], method="DOP853",
                    rtol=RTOL, atol=ATOL, dense_output=True)
    if not sol.success:  # pragma: no cover
        raise RuntimeError(sol.message)
    return sol.sol, quarter


def cs_sn(phi, t: TrigParams):
    """Return (Cs(phi), Sn(phi)); ``phi`` may be a scalar or an array."""
    dense, quarter = _quarter(t)
    T = 4.0 * quarter
    ph = np.mod(np.asarray(phi, dtype=float), T)
    # fold [0, T) onto [0, T/4]
    sn_sign = np.where(ph > 2 * quarter, -1.0, 1.0)
    ph = np.where(ph > 2 * quarter, T - ph, ph)
    cs_sign = np.where(ph > quarter, -1.0, 1.0)
    ph = np.where(ph > quarter, 2 * quarter - ph, ph)
    z, w = dense(np.atleast_1d(ph).ravel())
    z = z.reshape(np.shape(ph)) * cs_sign
    w = w.reshape(np.shape(ph)) * sn_sign
    if np.ndim(phi) == 0:
        return float(z), float(w)
    return z, w


def moment_quadrature(pairs, t: TrigParams) -> dict[tuple[int, int], float]:
    """Integrate Sn^alpha Cs^beta over one full period for every pair.

    The integrands ride along as extra states of the defining IVP, so no
    parity shortcut is taken; this is the raw quadrature.
    """
    pairs = [(int(a), int(b)) for a, b in pairs]
    alpha = np.array([a for a, _ in pairs], dtype=float)
    beta = np.array([b for _, b in pairs], dtype=float)
    e1, e2 = 2 * t.l1 - 1, 2 * t.l2 - 1

    def f(_, u):
        z, w = u[0], u[1]
        out = np.empty_like(u)
        out[0] = -w ** e1
        out[1] = z ** e2
        out[2:] = w ** alpha * z ** beta
        return out

    u0 = np.zeros(2 + len(pairs))
    u0[0] = t.cs0
    sol = solve_ivp(f, (0.0, period(t)), u0, method="DOP853", rtol=RTOL, atol=ATOL)
    if not sol.success:  # pragma: no cover
        raise RuntimeError(sol.message)
    return {pq: float(v) for pq, v in zip(pairs, sol.y[2:, -1])}


class MomentTable:
    """Cache of  int_0^T Sn^alpha Cs^beta dphi  for one parameter pair.

    Odd-parity entries are exact zeros and never integrated. Insertion is
    guarded by a lock so the table can be shared between threads.
    """

    def __init__(self, params: TrigParams):
        self.params = params
        self._cache: dict[tuple[int, int], float] = {}
        self._lock = threading.Lock()

    def __call__(self, alpha: int, beta: int) -> float:
        return self.get(alpha, beta)

    def get(self, alpha: int, beta: int) -> float:
        if alpha < 0 or beta < 0:
            raise ValueError("moment exponents must be non-negative")
        if alpha % 2 or beta % 2:
            return 0.0
        key = (alpha, beta)
        value = self._cache.get(key)
        if value is None:
            value = moment_quadrature([key], self.params)[key]
            with self._lock:
                value = self._cache.setdefault(key, value)
        return value

    def precompute(self, max_order: int) -> None:
        """Fill all even-even entries with alpha + beta <= max_order in one pass."""
        todo = [(a, b) for a in range(0, max_order + 1, 2) for b in range(0, max_order + 1 - a, 2)
                if (a, b) not in self._cache]
        if not todo:
            return
        values = moment_quadrature(todo, self.params)
        with self._lock:
            for k, v in values.items():
                self._cache.setdefault(k, v)

    def entries(self):
        with self._lock:
            return sorted(self._cache.items())

    def dump_csv(self, path, max_order: int | None = None) -> None:
        """Write alpha,beta,l1,l2,value,exact_zero rows (odd entries included)."""
        if max_order is not None:
            self.precompute(max_order)
            keys = [(a, b) for a in range(max_order + 1) for b in range(max_order + 1 - a)]
        else:
            keys = [k for k, _ in self.entries()]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["alpha", "beta", "l1", "l2", "value", "exact_zero"])
            for a, b in keys:
                v = self.get(a, b)
                writer.writerow([a, b, self.params.l1, self.params.l2, repr(v), int(bool(a % 2 or b % 2))])


_tables: dict[TrigParams, MomentTable] = {}
_tables_lock = threading.Lock()


def moment_table(t: TrigParams) -> MomentTable:
    with _tables_lock:
        table = _tables.get(t)
        if table is None:
            table = _tables[t] = MomentTable(t)
    return table


def moment(alpha: int, beta: int, t: TrigParams) -> float:
    return moment_table(t).get(alpha, beta)
