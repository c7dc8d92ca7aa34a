"""Planar candidate sets under the product measure ``mu x mu``.

Set masses and boundary measures are iterated 1-D integrals; boundary measures
are density line integrals along the parametrised boundary.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .measure import LineMeasure
from .profile import L_at, domination_constant

__all__ = [
    "SHAPES",
    "CandidateSet2D",
    "set_measure_2d",
    "boundary_measure_2d",
    "match_mass",
    "compare_candidates",
    "ComparisonTable",
    "comparison_report",
]

SHAPES = ("halfplane", "rotated", "ball", "square")
_QUAD = {"epsabs": 1e-14, "epsrel": 1e-12, "limit": 400}


@dataclass(frozen=True)
class CandidateSet2D:
    """``halfplane``: {x <= c}; ``rotated``: {x cos(theta) + y sin(theta) <= c};
    ``ball``: {|z| <= r}; ``square``: {max(|x|, |y|) <= a}."""

    shape: str
    param: float
    theta: float = 0.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}; expected one of {SHAPES}")
        if self.shape in ("ball", "square") and self.param < 0:
            raise ValueError(f"{self.shape} size must be >= 0, got {self.param}")

    @property
    def label(self) -> str:
        if self.shape == "rotated":
            return f"rotated(theta={self.theta!r})"
        return self.shape


def _check_box(m: LineMeasure, s: CandidateSet2D):
    lim = m.X * (math.sqrt(2.0) if s.shape in ("ball", "rotated") else 1.0)
    if abs(s.param) > lim * (1 + 1e-12):
        raise ValueError(f"{s.shape} parameter {s.param} leaves the truncation box (|.| <= {lim})")


def _quad(f, a, b, points=None) -> float:
    pts = None if points is None else [p for p in points if a < p < b]
    return integrate.quad(f, a, b, points=pts or None, **_QUAD)[0]


def set_measure_2d(m: LineMeasure, s: CandidateSet2D) -> float:
    _check_box(m, s)
    X = m.X
    if s.shape == "halfplane":
        return float(m.cdf(s.param))
    if s.shape == "square":
        return float((1.0 - 2.0 * m.cdf(-s.param)) ** 2) if s.param > 0 else 0.0
    if s.shape == "ball":
        r = s.param
        if r == 0:
            return 0.0
        # x = r sin(u) removes the square-root endpoint singularity
        g = lambda u: m.density(r * math.sin(u)) * (1.0 - 2.0 * m.cdf(-r * math.cos(u))) * r * math.cos(u)  # noqa: E731
        return 2.0 * _quad(g, 0.0, math.pi / 2)
    c, th = s.param, s.theta
    ct, st = math.cos(th), math.sin(th)
    if ct < 1e-12:
        return float(m.cdf(c))
    g = lambda y: m.density(y) * m.cdf((c - y * st) / ct)  # noqa: E731
    kink = c / st if st > 0 else None
    return float(m.cdf(-X) + _quad(g, -X, X, [0.0] + ([kink] if kink is not None else [])))


def boundary_measure_2d(m: LineMeasure, s: CandidateSet2D) -> float:
    """``int_{boundary} rho(x) rho(y) dl``."""
    _check_box(m, s)
    rho = m.density
    if s.shape == "halfplane":
        return float(rho(s.param))
    if s.shape == "square":
        a = s.param
        return 4.0 * float(rho(a)) * (1.0 - 2.0 * float(m.cdf(-a))) if a > 0 else 0.0
    if s.shape == "ball":
        r = s.param
        if r == 0:
            return 0.0
        return 8.0 * r * _quad(lambda u: rho(r * math.cos(u)) * rho(r * math.sin(u)), 0.0, math.pi / 4)
    c, th = s.param, s.theta
    ct, st = math.cos(th), math.sin(th)
    # point c*(ct, st) + v*(-st, ct)
    f = lambda v: rho(c * ct - v * st) * rho(c * st + v * ct)  # noqa: E731
    pts = []
    if st > 1e-15:
        pts.append(c * ct / st)
    if ct > 1e-15:
        pts.append(-c * st / ct)
    L = 2.0 * m.X
    return _quad(f, -L, L, pts)


def _bracket(m: LineMeasure, shape: str) -> tuple[float, float]:
    if shape in ("halfplane", "rotated"):
        return -m.X, m.X
    if shape == "ball":
        return 0.0, math.sqrt(2.0) * m.X
    return 0.0, m.X


def match_mass(m: LineMeasure, shape: str, mass: float, theta: float = 0.0) -> CandidateSet2D | None:
    """Solve for the shape parameter with ``mu^2(A) = mass`` (to 1e-9), or None if unreachable."""
    lo, hi = _bracket(m, shape)
    F = lambda v: set_measure_2d(m, CandidateSet2D(shape, v, theta)) - mass  # noqa: E731
    flo, fhi = F(lo), F(hi)
    if flo > 0 or fhi < 0:
        return None
    if shape == "halfplane":
        return CandidateSet2D(shape, float(m.quantile(mass)), theta)
    v = optimize.brentq(F, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    s = CandidateSet2D(shape, float(v), theta)
    if abs(F(v)) > 1e-9:
        raise RuntimeError(f"mass matching for {shape} stalled at residual {F(v):.3e}")
    return s


@dataclass(frozen=True)
class ComparisonTable:
    mass: float
    rows: tuple
    notes: tuple
    L: float
    K: float | None

    @property
    def halfplane_boundary(self) -> float:
        return next(r["boundary"] for r in self.rows if r["shape"] == "halfplane")

    @property
    def best(self) -> dict:
        return min(self.rows, key=lambda r: r["boundary"])

    @property
    def halfplane_over_best(self) -> float:
        return self.halfplane_boundary / self.best["boundary"]

    @property
    def empirical_K(self) -> float:
        return self.best["boundary"] / self.L

    @property
    def above_K_L(self) -> bool | None:
        return None if self.K is None else all(r["boundary"] >= self.K * self.L for r in self.rows)

    def summary(self) -> dict:
        b = self.best
        return {
            "mass": self.mass,
            "min_boundary": b["boundary"],
            "min_shape": b["shape"],
            "L": self.L,
            "K": self.K,
            "min_ge_K_L": self.above_K_L,
            "halfplane_over_min": self.halfplane_over_best,
            "empirical_K": self.empirical_K,
        }

    def to_dict(self) -> dict:
        return {"summary": self.summary(), "rows": list(self.rows), "notes": list(self.notes)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["shape", "parameter", "mass", "boundary", "ratio_to_halfplane"])
        for r in self.rows:
            w.writerow([r["shape"], repr(r["parameter"]), repr(r["mass"]), repr(r["boundary"]),
                        repr(r["ratio_to_halfplane"])])
        return buf.getvalue()


def compare_candidates(m: LineMeasure, mass: float, K: float | None = None, thetas=None) -> ComparisonTable:
    """Mass-matched boundary measures for every candidate family."""
    if not 0 < mass <= 0.5:
        raise ValueError(f"mass must lie in (0, 1/2], got {mass}")
    thetas = np.linspace(0.0, math.pi / 4, 9)[1:] if thetas is None else np.asarray(thetas, dtype=float)
    jobs = [("halfplane", 0.0)] + [("rotated", float(t)) for t in thetas] + [("ball", 0.0), ("square", 0.0)]
    found, notes = [], []
    for shape, th in jobs:
        s = match_mass(m, shape, mass, th)
        if s is None:
            notes.append(f"{shape} (theta={th}) cannot reach mass {mass} inside the box; skipped")
            continue
        found.append((s, set_measure_2d(m, s), boundary_measure_2d(m, s)))
    hp = found[0][2]
    rows = tuple({"shape": s.label, "parameter": s.param, "mass": float(ms), "boundary": float(b),
                  "ratio_to_halfplane": float(b / hp)} for s, ms, b in found)
    return ComparisonTable(float(mass), rows, tuple(notes), float(L_at(m.potential, mass)), K)


def comparison_report(m1: LineMeasure, m2: LineMeasure, masses, t_grid) -> dict:
    """Observational spot check of profile comparison through candidates.

    With ``c`` the 1-D domination constant of ``m1`` over ``m2``, records for each
    candidate under ``m1^2`` the ratio of its boundary to ``c`` times the best
    same-mass candidate under ``m2^2``. Candidates only bound true profiles from
    above, so the verdict is evidence, not proof.
    """
    c = domination_constant(m1, m2, t_grid)
    out = []
    for a in masses:
        t1 = compare_candidates(m1, a)
        t2 = compare_candidates(m2, a)
        ref = c * t2.best["boundary"]
        ratios = {r["shape"]: r["boundary"] / ref for r in t1.rows}
        out.append({"mass": float(a), "reference": ref, "ratios": ratios,
                    "all_at_least_one": bool(min(ratios.values()) >= 1.0 - 1e-9)})
    return {"domination_constant": c, "masses": out,
            "observed": all(e["all_at_least_one"] for e in out)}
