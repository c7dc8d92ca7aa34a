"""Exact isoperimetric profiles on the line and the comparison function L."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .measure import LineMeasure, MeasureError, Potential

__all__ = [
    "ProfileTable",
    "profile_at",
    "L_at",
    "asymptotic_ratio",
    "asymptotic_ratio_scan",
    "domination_constant",
    "profile_table",
    "comparison_bounds",
]


def _require_log_concave(m: LineMeasure):
    if not m.symmetric_log_concave:
        raise MeasureError(
            f"{m.potential.family} measure is not flagged symmetric log-concave; "
            "half-lines are only known to be extremal under that hypothesis")


def _profile_scalar(m: LineMeasure, t: float) -> float:
    if t <= 0.0 or t >= 1.0:
        return 0.0
    a = min(t, 1.0 - t)
    y = m.isf(a)
    return float(m.density(y))


def profile_at(m: LineMeasure, t):
    """``rho(H^{-1}(min(t, 1 - t)))``; zero at the degenerate masses 0 and 1."""
    _require_log_concave(m)
    t = np.asarray(t, dtype=float)
    out = np.array([_profile_scalar(m, float(v)) for v in t.ravel()]).reshape(t.shape)
    return out if out.ndim else float(out)


def _phi_prime_of_inverse(potential: Potential, u):
    return potential.deriv(potential.inverse(u))


def L_at(potential: Potential, t):
    """``min(t,1-t) * Phi'(Phi^{-1}(log 1/min(t,1-t)))`` with the right derivative."""
    phi0 = float(potential.value(0.0))
    if phi0 >= math.log(2.0):
        raise MeasureError(f"L is only defined on [0, 1] when Phi(0) < log 2, got Phi(0) = {phi0}")
    t = np.asarray(t, dtype=float)
    a = np.minimum(t, 1.0 - t)
    out = np.zeros_like(a)
    ok = a > 0
    out[ok] = a[ok] * _phi_prime_of_inverse(potential, np.log(1.0 / a[ok]))
    return out if out.ndim else float(out)


def asymptotic_ratio(m: LineMeasure, t):
    """``I(t) / (t Phi'(Phi^{-1}(log 1/t)))`` for small ``t``."""
    t = np.asarray(t, dtype=float)
    denom = t * _phi_prime_of_inverse(m.potential, np.log(1.0 / t))
    return profile_at(m, t) / denom


def asymptotic_ratio_scan(m: LineMeasure, t_grid) -> dict:
    """Tabulate the small-mass ratio and report how it approaches 1.

    ``monotone_approach`` is observed on the grid, not assumed.
    """
    t = np.asarray(t_grid, dtype=float)
    ratio = np.asarray(asymptotic_ratio(m, t))
    dev = np.abs(ratio - 1.0)
    order = np.argsort(t)[::-1]
    return {
        "t": t.tolist(),
        "ratio": ratio.tolist(),
        "deviation": dev.tolist(),
        "monotone_approach": bool(np.all(np.diff(dev[order]) <= 1e-12)),
    }


def comparison_bounds(m: LineMeasure, t_grid) -> tuple[float, float]:
    """Empirical ``(k1, k2)`` with ``k1 L <= I <= k2 L`` over the grid."""
    t = np.asarray(t_grid, dtype=float)
    r = np.asarray(profile_at(m, t)) / np.asarray(L_at(m.potential, t))
    return float(r.min()), float(r.max())


def domination_constant(m1: LineMeasure, m2: LineMeasure, t_grid) -> float:
    """Infimum over the grid of ``I_{m1} / I_{m2}``."""
    t = np.asarray(t_grid, dtype=float)
    if np.any((t <= 0) | (t >= 1)):
        raise ValueError("domination_constant: grid must avoid 0 and 1")
    r = np.asarray(profile_at(m1, t)) / np.asarray(profile_at(m2, t))
    return float(np.min(r))


@dataclass(frozen=True)
class ProfileTable:
    t: np.ndarray
    I: np.ndarray
    L: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        return self.I / self.L

    def rows(self):
        for row in zip(self.t, self.I, self.L, self.ratio):
            yield tuple(float(v) for v in row)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "I", "L", "ratio"])
        for row in self.rows():
            w.writerow([repr(v) for v in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"t": self.t.tolist(), "I": self.I.tolist(), "L": self.L.tolist(), "ratio": self.ratio.tolist()}

    @classmethod
    def from_csv(cls, text: str) -> "ProfileTable":
        rows = list(csv.reader(io.StringIO(text)))
        if rows[0] != ["t", "I", "L", "ratio"]:
            raise ValueError(f"unexpected ProfileTable header {rows[0]}")
        data = np.array([[float(v) for v in r] for r in rows[1:]])
        return cls(data[:, 0], data[:, 1], data[:, 2])


def profile_table(m: LineMeasure, t_grid) -> ProfileTable:
    t = np.asarray(t_grid, dtype=float)
    return ProfileTable(t, np.asarray(profile_at(m, t)), np.asarray(L_at(m.potential, t)))
