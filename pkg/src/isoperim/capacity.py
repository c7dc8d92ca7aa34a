"""Half-line capacities, Hardy-type constants and rate functions.

Rate functions ``T`` and ``beta`` are described by recipes (kind + parameters)
rather than closures so that every report can be reproduced from its JSON.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import optimize

from .measure import LineMeasure, MeasureError, Potential, potential_from_recipe

__all__ = [
    "INFINITY_SENTINEL",
    "RateFunction",
    "BetaFunction",
    "FSpec",
    "HardyResult",
    "capacity_halfline",
    "hardy_constants",
    "beckner_constant_interval",
    "supA_closed_form",
    "supA_grid_oracle",
    "beta_from_T",
    "beta_from_potential",
    "beta_from_F",
    "beta_sandwich",
    "capacity_measure_check",
    "laplace_sufficient_check",
]

INFINITY_SENTINEL = 1e12
E_MINUS_1 = math.e - 1.0


def _phi_prime_of_inverse(pot: Potential, u):
    return pot.deriv(pot.inverse(u))


# ---------------------------------------------------------------------------
# Rate functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateFunction:
    """A rate ``T: (0, 1] -> [0, inf)``.

    kinds: ``constant`` (``c``), ``power`` (``x**(2(1-1/p)) / p**2``),
    ``potential`` (``1 / Phi'(Phi^{-1}(1/x))**2`` for a measure recipe).
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        need = {"constant": "c", "power": "p", "potential": "measure"}
        if self.kind not in need:
            raise ValueError(f"unknown rate function kind {self.kind!r}")
        if need[self.kind] not in self.params:
            raise ValueError(f"rate function of kind {self.kind!r} needs parameter {need[self.kind]!r}")
        if self.kind == "potential":
            object.__setattr__(self, "_pot", potential_from_recipe(self.params["measure"]))

    @classmethod
    def constant(cls, c: float) -> "RateFunction":
        return cls("constant", {"c": float(c)})

    @classmethod
    def power(cls, p: float) -> "RateFunction":
        return cls("power", {"p": float(p)})

    @classmethod
    def from_potential(cls, potential: Potential) -> "RateFunction":
        return cls("potential", {"measure": potential.recipe})

    @property
    def recipe(self) -> dict:
        return {"kind": self.kind, **self.params}

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            out = np.full_like(x, self.params["c"])
        elif self.kind == "power":
            p = self.params["p"]
            out = np.power(x, 2.0 * (1.0 - 1.0 / p)) / p**2
        else:
            with np.errstate(divide="ignore"):
                out = 1.0 / _phi_prime_of_inverse(self._pot, 1.0 / x) ** 2
        return out if out.ndim else float(out)

    def certificates(self, n: int = 1000, x_min: float = 1e-8) -> dict[str, bool]:
        """``T`` non-decreasing and ``T(x)/x`` non-increasing on a log grid."""
        x = np.geomspace(x_min, 1.0, n)
        v = np.asarray(self(x))
        tol = 1e-12 * np.maximum(np.abs(v[1:]), 1e-300)
        q = v / x
        return {
            "non_decreasing": bool(np.all(np.diff(v) >= -tol)),
            "ratio_non_increasing": bool(np.all(np.diff(q) <= 1e-12 * np.abs(q[:-1]))),
        }


@dataclass(frozen=True)
class FSpec:
    """Function ``F`` for homogeneous F-Sobolev inequalities.

    kinds: ``log`` and ``logpow`` (``log(1+u)**k - log(2)**k``).
    """

    kind: str
    params: dict = field(default_factory=dict)
    constant: float | None = None

    def __post_init__(self):
        if self.kind not in ("log", "logpow"):
            raise ValueError(f"unknown F kind {self.kind!r}")
        if self.kind == "logpow" and "k" not in self.params:
            raise ValueError("F of kind 'logpow' needs parameter 'k'")
        if self.F(1.0) > 0:
            raise ValueError("F-Sobolev needs F(1) <= 0")

    @property
    def recipe(self) -> dict:
        r = {"kind": self.kind, **self.params}
        if self.constant is not None:
            r["C_F"] = self.constant
        return r

    def F(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "log":
            with np.errstate(divide="ignore"):
                out = np.log(u)
        else:
            k = self.params["k"]
            out = np.log1p(u) ** k - math.log(2.0) ** k
        return out if out.ndim else float(out)

    def u_times_F(self, u):
        """``u F(u)`` with the value 0 at ``u = 0``."""
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        pos = u > 0
        out[pos] = u[pos] * np.asarray(self.F(u[pos]))
        return out

    def positive_part(self, u):
        return np.maximum(self.F(u), 0.0)

    def non_decreasing(self) -> bool:
        v = np.asarray(self.F(np.geomspace(1e-8, 1e8, 1000)))
        return bool(np.all(np.diff(v) >= 0))


@dataclass(frozen=True)
class BetaFunction:
    """A super-Poincare rate ``beta: [1, inf) -> [0, inf)``.

    kinds: ``from_T`` (rate recipe ``T``), ``potential`` (measure recipe),
    ``F`` (``1 / (1 + F_+(s))``), ``log`` (``1 / log(1 + s)``), ``constant``.
    ``scale`` multiplies the whole function.
    """

    kind: str
    params: dict = field(default_factory=dict)
    scale: float = 1.0

    def __post_init__(self):
        k = self.kind
        need = {"from_T": "T", "potential": "measure", "F": "F", "constant": "c"}.get(k)
        if need is not None and need not in self.params:
            raise ValueError(f"beta of kind {k!r} needs parameter {need!r}")
        if k == "from_T":
            T = self.params["T"]
            if isinstance(T, RateFunction):
                T = T.recipe
                object.__setattr__(self, "params", {"T": T})
            object.__setattr__(self, "_T", RateFunction(T["kind"], {a: b for a, b in T.items() if a != "kind"}))
        elif k == "potential":
            pot = potential_from_recipe(self.params["measure"])
            if float(_phi_prime_of_inverse(pot, 1.0)) == 0.0:
                raise MeasureError("degenerate rate: Phi'(Phi^{-1}(1)) = 0")
            object.__setattr__(self, "_pot", pot)
        elif k == "F":
            F = self.params["F"]
            if isinstance(F, FSpec):
                object.__setattr__(self, "params", {"F": F.recipe})
                object.__setattr__(self, "_F", F)
            else:
                object.__setattr__(self, "_F", FSpec(F["kind"], {a: b for a, b in F.items()
                                                                 if a not in ("kind", "C_F")}))
        elif k not in ("log", "constant"):
            raise ValueError(f"unknown beta kind {k!r}")

    @property
    def recipe(self) -> dict:
        r = {"kind": self.kind, **self.params}
        if self.scale != 1.0:
            r["scale"] = self.scale
        return r

    def scaled(self, factor: float) -> "BetaFunction":
        return BetaFunction(self.kind, self.params, self.scale * factor)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 1.0):
            raise ValueError("beta is defined on [1, inf)")
        k = self.kind
        if k == "from_T":
            arg = np.where(s >= E_MINUS_1, 1.0 / np.log1p(np.maximum(s, E_MINUS_1)), 1.0)
            out = np.asarray(self._T(arg), dtype=float)
        elif k == "potential":
            u = np.where(s >= E_MINUS_1, np.log1p(np.maximum(s, E_MINUS_1)), 1.0)
            out = 1.0 / np.asarray(_phi_prime_of_inverse(self._pot, u), dtype=float) ** 2
        elif k == "F":
            out = 1.0 / (1.0 + self._F.positive_part(s))
        elif k == "log":
            out = 1.0 / np.log1p(s)
        else:
            out = np.full_like(s, self.params["c"])
        out = self.scale * out
        return out if out.ndim else float(out)

    @property
    def vanishes_at_infinity(self) -> bool:
        k = self.kind
        if k in ("log", "F"):
            return True
        if k == "constant":
            return self.params["c"] == 0
        if k == "from_T":
            T = self._T
            if T.kind == "constant":
                return T.params["c"] == 0
            if T.kind == "power":
                return T.params["p"] > 1
            return float(T(1e-300)) == 0.0 or float(_phi_prime_of_inverse(T._pot, 1e6)) > 1e3 * float(
                _phi_prime_of_inverse(T._pot, 1.0))
        pot = self._pot
        if getattr(pot, "family", "") == "power":
            return pot.p > 1
        return float(_phi_prime_of_inverse(pot, 1e6)) > 1e3 * float(_phi_prime_of_inverse(pot, 1.0))

    def inverse(self, y: float) -> float | None:
        """``inf{s >= 1 : beta(s) <= y}``, or ``None`` if ``beta`` stays above ``y``."""
        if float(self(1.0)) <= y:
            return 1.0
        if not self.vanishes_at_infinity:
            return None
        hi = 2.0
        while float(self(hi)) > y:
            hi *= hi
            if hi > 1e300:
                return None
        lo = 1.0
        for _ in range(400):
            mid = math.sqrt(lo * hi)
            if float(self(mid)) > y:
                lo = mid
            else:
                hi = mid
            if hi / lo - 1.0 < 1e-13:
                break
        return hi

    def certificates(self, n: int = 1000, s_max: float = 1e12) -> dict[str, bool]:
        """``beta`` non-increasing on [1, inf) and ``s beta(s)`` non-decreasing on [2, inf)."""
        s = np.geomspace(1.0, s_max, n)
        v = np.asarray(self(s))
        s2 = s[s >= 2.0]
        w = s2 * np.asarray(self(s2))
        return {
            "non_increasing": bool(np.all(np.diff(v) <= 1e-12 * np.abs(v[:-1]))),
            "s_beta_non_decreasing": bool(np.all(np.diff(w) >= -1e-12 * np.abs(w[:-1]))),
        }


def beta_from_T(T: RateFunction) -> BetaFunction:
    """``T(1/log(1+s))`` for ``s >= e-1`` and ``T(1)`` below."""
    return BetaFunction("from_T", {"T": T.recipe})


def beta_from_potential(potential: Potential) -> BetaFunction:
    """``1 / Phi'(Phi^{-1}(log(1+s)))**2`` for ``s >= e-1``, frozen at ``log(1+s) = 1`` below."""
    return BetaFunction("potential", {"measure": potential.recipe})


def beta_from_F(F: FSpec) -> BetaFunction:
    return BetaFunction("F", {"F": F.recipe})


# ---------------------------------------------------------------------------
# Capacities and Hardy constants
# ---------------------------------------------------------------------------


def capacity_halfline(m: LineMeasure, x: float) -> float:
    """Capacity of the half-line on the far side of ``x`` from the median.

    Equals ``1 / int_x^m 1/rho`` (or the mirror formula for ``x > m``); values
    above the sentinel, including ``x = m``, come back as ``inf``.
    """
    if x == m.median:
        return math.inf
    log_int = math.log(m.Z) + float(m.log_inv_density_integral(x - m.median))
    cap = math.exp(-log_int)
    return math.inf if cap > INFINITY_SENTINEL else cap


@dataclass
class HardyResult:
    B_minus: float
    B_plus: float
    argmax_minus: float
    argmax_plus: float
    diagnostics: list = field(default_factory=list)

    @property
    def B(self) -> float:
        return max(self.B_minus, self.B_plus)

    def to_dict(self) -> dict:
        return {"B_minus": self.B_minus, "B_plus": self.B_plus, "argmax_minus": self.argmax_minus,
                "argmax_plus": self.argmax_plus, "diagnostics": list(self.diagnostics)}


def _hardy_side(m: LineMeasure, T: RateFunction, side: str, t_grid: np.ndarray):
    logZ = math.log(m.Z)

    def log_value(t: float) -> float:
        if side == "-":
            x = float(m.quantile(t))
            tail = float(m.cdf(x))
        else:
            x = float(m.isf(t))
            tail = float(m.sf(x))
        if x == 0.0:
            return -math.inf
        Tv = float(T(1.0 / math.log1p(1.0 / tail)))
        if Tv <= 0.0:
            return math.inf
        return math.log(tail) + logZ + float(m.log_inv_density_integral(x)) - math.log(Tv)

    vals = np.array([log_value(float(t)) for t in t_grid])
    if np.any(np.isposinf(vals)):
        return math.inf, math.nan, "rate function vanishes: supremum is infinite"
    k = int(np.argmax(vals))
    best, arg = vals[k], float(t_grid[k])
    if 0 < k < t_grid.size - 1:
        lo, hi = math.log(t_grid[k - 1]), math.log(t_grid[k + 1])
        res = optimize.minimize_scalar(lambda u: -log_value(math.exp(u)), bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-10})
        if -res.fun > best:
            best, arg = -res.fun, math.exp(res.x)
    diag = ""
    if k == 0:
        # supremum at the smallest mass: compare with one decade up
        j = int(np.searchsorted(t_grid, 10.0 * t_grid[0]))
        growth = math.exp(vals[0] - vals[min(j, t_grid.size - 1)])
        if growth > 1.0 + 1e-3:
            return math.inf, arg, f"supremum still growing by factor {growth:.6g} over the last decade"
    value = math.exp(best)
    if value > INFINITY_SENTINEL:
        return math.inf, arg, "supremum exceeds the divergence sentinel"
    return value, arg, diag


def hardy_constants(m: LineMeasure, T: RateFunction, n_grid: int = 512, t_min: float = 1e-10) -> HardyResult:
    """Suprema ``B_-(T)`` and ``B_+(T)`` over quantile-spaced grids with local refinement."""
    t_grid = np.geomspace(t_min, 0.5, n_grid)
    bm, am, dm = _hardy_side(m, T, "-", t_grid)
    bp, ap, dp = _hardy_side(m, T, "+", t_grid)
    diags = [f"B_-: {dm}"] if dm else []
    if dp:
        diags.append(f"B_+: {dp}")
    return HardyResult(bm, bp, am, ap, diags)


def beckner_constant_interval(m: LineMeasure, T: RateFunction, **kw) -> tuple[float, float]:
    """Certified bracket ``(B/6, 20 B)`` for the optimal Beckner constant."""
    B = hardy_constants(m, T, **kw).B
    if math.isinf(B):
        return math.inf, math.inf
    return B / 6.0, 20.0 * B


# ---------------------------------------------------------------------------
# Variational lemma
# ---------------------------------------------------------------------------


def _check_supA_args(Q_total, Q_A, K, a):
    if not 0 < a < 1:
        raise ValueError(f"a must lie in (0, 1), got {a}")
    if not Q_A > 0 or Q_A > Q_total:
        raise ValueError(f"need 0 < Q_A <= Q_total, got Q_A={Q_A}, Q_total={Q_total}")
    if not K > Q_total:
        raise ValueError(f"need K > Q_total, got K={K}, Q_total={Q_total}")


def supA_closed_form(Q_total: float, Q_A: float, K: float, a: float) -> float:
    """``sup int 1_A g dQ`` over ``g in [0,1)`` with ``int (1-g)^{a/(a-1)} dQ <= K``."""
    _check_supA_args(Q_total, Q_A, K, a)
    return Q_A * (1.0 - (1.0 + (K - Q_total) / Q_A) ** ((a - 1.0) / a))


def supA_grid_oracle(Q_total: float, Q_A: float, K: float, a: float, n_grid: int = 2001) -> float:
    """Brute-force maximisation over ``g`` constant on ``A`` and on its complement.

    For each value of ``g`` off ``A`` on a grid, the largest feasible value on
    ``A`` is found by bisection of the constraint.
    """
    _check_supA_args(Q_total, Q_A, K, a)
    r = a / (a - 1.0)
    Q_B = Q_total - Q_A
    best = 0.0
    for gB in np.linspace(0.0, 0.999, n_grid):
        budget = K - Q_B * (1.0 - gB) ** r
        if budget < Q_A:
            break  # the constraint only tightens as gB grows
        lo, hi = 0.0, 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            # g = 1 makes (1 - g)^r infinite: never feasible
            if mid < 1.0 and Q_A * (1.0 - mid) ** r <= budget:
                lo = mid
            else:
                hi = mid
        best = max(best, Q_A * lo)
    return best


# ---------------------------------------------------------------------------
# Capacity-measure criteria
# ---------------------------------------------------------------------------


def _sup_over_s(fun, s_hint: float | None = None, s_max: float = 1e12, n: int = 400) -> tuple[float, float]:
    s = np.geomspace(1.0, s_max, n)
    if s_hint is not None:
        s = np.unique(np.append(s, s_hint))
    v = np.array([fun(float(x)) for x in s])
    k = int(np.argmax(v))
    best, arg = float(v[k]), float(s[k])
    lo, hi = math.log(s[max(k - 1, 0)]), math.log(s[min(k + 1, s.size - 1)])
    if hi > lo:
        res = optimize.minimize_scalar(lambda u: -fun(math.exp(u)), bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-12})
        if -res.fun > best:
            best, arg = float(-res.fun), float(math.exp(res.x))
    return best, arg


def beta_sandwich(beta: BetaFunction, a: float) -> tuple[float, float, float]:
    """``(a/(2 beta(1/a)), sup_s a/((1+(s-1)a) beta(s)), 2a/beta(1/a))``."""
    if not 0 < a < 0.5:
        raise ValueError("the sandwich is stated for a in (0, 1/2)")
    ref = a / float(beta(1.0 / a))
    sup, _ = _sup_over_s(lambda s: a / ((1.0 + (s - 1.0) * a) * float(beta(s))), s_hint=1.0 / a)
    return 0.5 * ref, sup, 2.0 * ref


def capacity_measure_check(m: LineMeasure, beta: BetaFunction, t_grid) -> dict:
    """Compare half-line capacities with ``t / beta(1/t)`` and the sup form.

    Margins are ratios ``capacity / required``; a margin below 1 is a violation
    and its size is the constant the criterion is off by.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any((t_grid <= 0) | (t_grid >= 0.5)):
        raise ValueError("capacity_measure_check: t_grid must lie in (0, 1/2)")
    direct, supform, caps = [], [], []
    for t in t_grid:
        t = float(t)
        cap = capacity_halfline(m, float(m.quantile(t)))
        need_direct = t / float(beta(1.0 / t))
        need_sup, _ = _sup_over_s(lambda s: t / ((1.0 + (s - 1.0) * t) * float(beta(s))), s_hint=1.0 / t)
        caps.append(cap)
        direct.append(cap / need_direct)
        supform.append(cap / need_sup)
    worst = min(min(direct), min(supform))
    return {
        "check": "capacity-measure",
        "measure": m.recipe,
        "beta": beta.recipe,
        "grid": t_grid.tolist(),
        "capacity": caps,
        "margin_direct": direct,
        "margin_sup": supform,
        "worst_margin": worst,
        "verdict": "pass" if worst >= 1.0 - 1e-9 else "fail",
    }


def laplace_sufficient_check(m: LineMeasure, T: RateFunction, n: int = 200) -> dict:
    """Scan ``|V'|^2 T(1/(V + log|V'|))`` over the last two decades before truncation."""
    pot = m.potential
    report = {"check": "laplace-sufficient", "measure": m.recipe, "T": T.recipe}
    if pot.family == "nonconvex-example":
        report.update(grid=[], worst_margin=None, verdict="inconclusive",
                      note="V' does not stay away from zero-like oscillation; precondition fails")
        return report
    x = np.geomspace(m.X / 100.0, m.X, n)
    V = pot.value(x)
    dV = np.abs(pot.deriv(x))
    with np.errstate(divide="ignore"):
        denom = V + np.log(dV)
    ok = (dV > 0) & (denom >= 1.0)
    if not np.any(ok):
        report.update(grid=x.tolist(), worst_margin=None, verdict="inconclusive",
                      note="V + log|V'| never reaches 1 on the scan")
        return report
    vals = dV[ok] ** 2 * np.asarray(T(1.0 / denom[ok]))
    worst = float(np.min(vals))
    report.update(grid=x[ok].tolist(), values=vals.tolist(), worst_margin=worst,
                  verdict="sufficient condition holds" if worst > 0 else "fails")
    return report


def rate_from_recipe(recipe: dict[str, Any]) -> RateFunction:
    return RateFunction(recipe["kind"], {k: v for k, v in recipe.items() if k != "kind"})


def beta_from_recipe(recipe: dict[str, Any]) -> BetaFunction:
    params = {k: v for k, v in recipe.items() if k not in ("kind", "scale")}
    return BetaFunction(recipe["kind"], params, recipe.get("scale", 1.0))
