"""Even potentials on the half-line and the probability measures they define.

A potential ``Phi: [0, inf) -> [0, inf)`` defines the symmetric measure with
density ``exp(-Phi(|x|)) / Z`` on the real line. :class:`LineMeasure` caches a
panel table of tail masses so that the CDF, survival function and quantile are
accurate in the *relative* sense far out in the tails, which is where the
isoperimetric quantities of interest live.
"""

from __future__ import annotations

import functools
import math
from typing import Any, Mapping

import numpy as np
from scipy import integrate, optimize

__all__ = [
    "MeasureError",
    "Potential",
    "PowerPotential",
    "PowerLogPotential",
    "NonConvexExamplePotential",
    "TabulatedPotential",
    "SmoothedPotential",
    "LineMeasure",
    "potential_from_recipe",
    "build_measure",
    "cdf",
    "quantile",
    "tail_equivalent",
]

TAIL_TARGET = 1e-13
CHECK_GRID = np.concatenate([np.linspace(0.0, 2.0, 201)[1:], np.linspace(2.0, 40.0, 381)[1:]])

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


class MeasureError(ValueError):
    """Raised for potentials that cannot define a usable probability measure."""


def gauss_legendre(f, a, b):
    """Fixed 20-point Gauss-Legendre rule, vectorised over arrays of panels."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[..., None] + half[..., None] * _GL_NODES
    return half * (f(x) @ _GL_WEIGHTS)


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------


class Potential:
    """Base class for even potentials, evaluated on ``x >= 0``.

    Subclasses provide ``value``, ``deriv`` (right derivative) and ``second``.
    ``inverse`` defaults to a bracketed root find, i.e. the generalised inverse
    ``inf{x >= 0 : Phi(x) >= u}``.
    """

    family = "abstract"
    convex = False
    sqrt_concave = False
    smooth_from = 0.0

    def value(self, x):
        raise NotImplementedError

    def deriv(self, x):
        raise NotImplementedError

    def second(self, x):
        # central differences; subclasses with closed forms override
        x = np.asarray(x, dtype=float)
        d = 1e-4 * np.maximum(1.0, x)
        lo = np.maximum(x - d, 0.0)
        return (self.deriv(x + d) - self.deriv(lo)) / (x + d - lo)

    @property
    def recipe(self) -> dict:
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)

    def inverse(self, u):
        u = np.asarray(u, dtype=float)
        out = np.empty_like(u)
        for idx, target in np.ndenumerate(u):
            out[idx] = self._inverse_scalar(float(target))
        return out if out.ndim else float(out)

    def _inverse_scalar(self, u: float) -> float:
        if u <= float(self.value(0.0)):
            return 0.0
        hi = 1.0
        while float(self.value(hi)) < u:
            hi *= 2.0
            if hi > 1e12:
                raise MeasureError(f"cannot invert {self.family} potential at {u}")
        lo = 0.0
        if self.monotone:
            return optimize.brentq(lambda x: float(self.value(x)) - u, lo, hi, xtol=1e-15, rtol=1e-15)
        # generalised inverse for non-monotone potentials: bisect on the running max
        grid = np.linspace(0.0, hi, 4097)
        run = np.maximum.accumulate(self.value(grid))
        k = int(np.searchsorted(run, u))
        lo, hi = grid[max(k - 1, 0)], grid[k]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self._running_max(mid) >= u:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-15 * max(1.0, hi):
                break
        return hi

    def _running_max(self, x: float) -> float:
        grid = np.linspace(0.0, x, 2049)
        return float(np.max(self.value(grid)))

    @functools.cached_property
    def monotone(self) -> bool:
        v = self.value(CHECK_GRID)
        return bool(np.all(np.diff(v) >= -1e-12 * np.maximum(1.0, np.abs(v[1:]))))

    def check_invariants(self, grid=None) -> dict[str, bool]:
        """Grid checks for the flags this potential claims."""
        x = CHECK_GRID if grid is None else np.asarray(grid, dtype=float)
        v = self.value(x)
        out = {
            "nonnegative_at_zero": float(self.value(0.0)) >= 0.0,
            "non_decreasing": bool(np.all(np.diff(v) >= -1e-12 * np.maximum(1.0, np.abs(v[1:])))),
        }
        inv = self.inverse(v)
        out["inverse_roundtrip"] = bool(np.all(np.abs(self.value(inv) - v) <= 1e-10 * np.maximum(1.0, v)))
        h = 1e-3
        xs = x[x >= self.smooth_from]
        if self.convex:
            slopes = (self.value(xs + h) - self.value(xs)) / h
            out["convex"] = bool(np.all(np.diff(slopes) >= -1e-7 * np.maximum(1.0, np.abs(slopes[1:]))))
        if self.sqrt_concave:
            root = lambda y: np.sqrt(self.value(y))  # noqa: E731
            slopes = (root(xs + h) - root(xs)) / h
            out["sqrt_concave"] = bool(np.all(np.diff(slopes) <= 1e-7 * np.maximum(1.0, np.abs(slopes[1:]))))
        return out


class PowerPotential(Potential):
    """``Phi(x) = scale * x**p``; ``p = 1`` is the symmetric exponential law."""

    family = "power"

    def __init__(self, p: float, scale: float = 1.0):
        if not p > 0 or not scale > 0:
            raise MeasureError(f"power family needs p > 0 and scale > 0, got p={p}, scale={scale}")
        self.p = float(p)
        self.scale = float(scale)
        self.convex = self.p >= 1.0
        self.sqrt_concave = self.p <= 2.0

    @property
    def recipe(self):
        r = {"family": "power", "p": self.p}
        if self.scale != 1.0:
            r["scale"] = self.scale
        return r

    def value(self, x):
        return self.scale * np.power(np.abs(x), self.p)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        if self.p == 1.0:
            return np.full_like(x, self.scale) if x.ndim else self.scale
        with np.errstate(divide="ignore"):
            return self.scale * self.p * np.power(x, self.p - 1.0)

    def second(self, x):
        x = np.asarray(x, dtype=float)
        if self.p == 1.0:
            return np.zeros_like(x) if x.ndim else 0.0
        with np.errstate(divide="ignore"):
            return self.scale * self.p * (self.p - 1.0) * np.power(x, self.p - 2.0)

    def inverse(self, u):
        u = np.asarray(u, dtype=float)
        out = np.power(np.maximum(u, 0.0) / self.scale, 1.0 / self.p)
        return out if out.ndim else float(out)


class PowerLogPotential(Potential):
    """``Phi(x) = x**p * log(gamma + x)**alpha``."""

    family = "power-log"

    def __init__(self, p: float, alpha: float, gamma: float | str = "auto"):
        if not 1.0 <= p <= 2.0 or alpha < 0:
            raise MeasureError(f"power-log family needs p in [1, 2] and alpha >= 0, got p={p}, alpha={alpha}")
        if gamma == "auto":
            if p >= 2.0 and alpha > 0:
                raise MeasureError("power-log family: gamma='auto' is undefined for p = 2; pass gamma explicitly")
            gamma = math.exp(alpha / (2.0 - p)) if alpha > 0 else 1.0
        gamma = float(gamma)
        if gamma < 1.0:
            raise MeasureError(f"power-log family needs gamma >= 1, got {gamma}")
        self.p, self.alpha, self.gamma = float(p), float(alpha), gamma
        self.convex = True
        self.sqrt_concave = True

    @property
    def recipe(self):
        return {"family": "power-log", "p": self.p, "alpha": self.alpha, "gamma": self.gamma}

    def value(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        return np.power(x, self.p) * np.power(np.log(self.gamma + x), self.alpha)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        p, a, g = self.p, self.alpha, self.gamma
        L = np.log(g + x)
        with np.errstate(divide="ignore", invalid="ignore"):
            dA = p * np.power(x, p - 1.0) if p != 1.0 else np.ones_like(x)
            dB = a * np.power(L, a - 1.0) / (g + x) if a != 0 else np.zeros_like(x)
            out = dA * np.power(L, a) + np.power(x, p) * np.where(a != 0, dB, 0.0)
        return out

    def second(self, x):
        x = np.asarray(x, dtype=float)
        p, a, g = self.p, self.alpha, self.gamma
        L = np.log(g + x)
        with np.errstate(divide="ignore", invalid="ignore"):
            A = np.power(x, p)
            dA = p * np.power(x, p - 1.0) if p != 1.0 else np.ones_like(x)
            d2A = p * (p - 1.0) * np.power(x, p - 2.0) if p != 1.0 else np.zeros_like(x)
            B = np.power(L, a)
            if a == 0:
                dB = d2B = np.zeros_like(x)
            else:
                dB = a * np.power(L, a - 1.0) / (g + x)
                d2B = (a * (a - 1.0) * np.power(L, a - 2.0) - a * np.power(L, a - 1.0)) / (g + x) ** 2
        return d2A * B + 2.0 * dA * dB + A * d2B


def _even_quartic_patch(f0: float, f1: float, f2: float, eps: float) -> tuple[float, float, float]:
    """Coefficients of ``c0 + c2 x^2 + c4 x^4`` matching value, slope and
    curvature at ``eps``; evenness makes the glued function C^2 at 0."""
    c4 = (f2 - f1 / eps) / (8.0 * eps**2)
    c2 = (f1 - 4.0 * c4 * eps**3) / (2.0 * eps)
    c0 = f0 - c2 * eps**2 - c4 * eps**4
    return c0, c2, c4


class _PatchedPotential(Potential):
    """Outer formula for ``x >= eps`` glued to an even quartic core."""

    eps = 1.0

    def _setup_patch(self):
        e = self.eps
        self._c = _even_quartic_patch(
            float(self._outer(e)), float(self._outer_d(e)), float(self._outer_d2(e)), e
        )

    def value(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        c0, c2, c4 = self._c
        core = c0 + c2 * x**2 + c4 * x**4
        return np.where(x < self.eps, core, self._outer(np.maximum(x, self.eps)))

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        _, c2, c4 = self._c
        core = 2.0 * c2 * x + 4.0 * c4 * x**3
        return np.where(x < self.eps, core, self._outer_d(np.maximum(x, self.eps)))

    def second(self, x):
        x = np.asarray(x, dtype=float)
        _, c2, c4 = self._c
        core = 2.0 * c2 + 12.0 * c4 * x**2
        return np.where(x < self.eps, core, self._outer_d2(np.maximum(x, self.eps)))


class NonConvexExamplePotential(_PatchedPotential):
    """``|x|**alpha + log(1 + |x| sin(x)**2)`` outside ``[-eps, eps]``.

    Not convex; ``V'`` comes close to zero near the zeros of ``sin``.
    """

    family = "nonconvex-example"

    def __init__(self, alpha: float, eps: float = 0.5):
        if not 1.0 < alpha < 2.0:
            raise MeasureError(f"nonconvex-example needs alpha in (1, 2), got {alpha}")
        if not eps > 0:
            raise MeasureError(f"nonconvex-example needs eps > 0, got {eps}")
        self.alpha, self.eps = float(alpha), float(eps)
        self._setup_patch()

    @property
    def recipe(self):
        return {"family": "nonconvex-example", "alpha": self.alpha, "eps": self.eps}

    def _outer(self, x):
        return np.power(x, self.alpha) + np.log1p(x * np.sin(x) ** 2)

    def _outer_d(self, x):
        s, c = np.sin(x), np.cos(x)
        return self.alpha * np.power(x, self.alpha - 1.0) + (s * s + 2.0 * x * s * c) / (1.0 + x * s * s)

    def _outer_d2(self, x):
        s, c = np.sin(x), np.cos(x)
        g = 1.0 + x * s * s
        dg = s * s + 2.0 * x * s * c
        d2g = 4.0 * s * c + 2.0 * x * (c * c - s * s)
        return self.alpha * (self.alpha - 1.0) * np.power(x, self.alpha - 2.0) + d2g / g - (dg / g) ** 2


class SmoothedPotential(_PatchedPotential):
    """``base`` outside ``[0, a]`` with an even C^2 quartic core inside."""

    family = "smoothed"

    def __init__(self, base: Potential, a: float = 1.0):
        if not a > 0:
            raise MeasureError(f"smoothing radius must be positive, got {a}")
        self.base, self.eps = base, float(a)
        self._setup_patch()
        c0, c2, c4 = self._c
        self.convex = base.convex and c2 > 0 and 2.0 * c2 + 12.0 * c4 * self.eps**2 >= 0
        self.sqrt_concave = False
        self.smooth_from = self.eps

    @property
    def recipe(self):
        return {"family": "smoothed", "base": self.base.recipe, "a": self.eps}

    def _outer(self, x):
        return self.base.value(x)

    def _outer_d(self, x):
        return self.base.deriv(x)

    def _outer_d2(self, x):
        return self.base.second(x)


class TabulatedPotential(Potential):
    """Piecewise-linear interpolation of ``Phi`` (not of the density).

    The right derivative is the slope of the segment to the right; beyond the
    last knot the last slope is continued.
    """

    family = "table"

    def __init__(self, x, phi):
        x = np.asarray(x, dtype=float)
        phi = np.asarray(phi, dtype=float)
        if x.ndim != 1 or x.shape != phi.shape or x.size < 2:
            raise MeasureError("table family needs equal-length 'x' and 'phi' arrays with >= 2 entries")
        if x[0] != 0.0 or np.any(np.diff(x) <= 0):
            raise MeasureError("table family: 'x' must start at 0 and be strictly increasing")
        if not np.all(np.isfinite(phi)) or phi[0] < 0:
            raise MeasureError("table family: 'phi' must be finite with phi[0] >= 0")
        if np.any(np.diff(phi) <= 0):
            raise MeasureError("table family: non-monotone potential, 'phi' must be strictly increasing")
        self.x, self.phi = x, phi
        self.slopes = np.diff(phi) / np.diff(x)
        self.convex = bool(np.all(np.diff(self.slopes) >= -1e-12))
        root = np.sqrt(phi)
        self.sqrt_concave = bool(np.all(np.diff(np.diff(root) / np.diff(x)) <= 1e-12))

    @property
    def recipe(self):
        return {"family": "table", "x": self.x.tolist(), "phi": self.phi.tolist()}

    def value(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        inside = np.interp(x, self.x, self.phi)
        return np.where(x > self.x[-1], self.phi[-1] + self.slopes[-1] * (x - self.x[-1]), inside)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        k = np.clip(np.searchsorted(self.x, x, side="right") - 1, 0, self.slopes.size - 1)
        return self.slopes[k]

    def second(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x) if x.ndim else 0.0

    def inverse(self, u):
        u = np.asarray(u, dtype=float)
        inside = np.interp(u, self.phi, self.x)
        out = np.where(u > self.phi[-1], self.x[-1] + (u - self.phi[-1]) / self.slopes[-1], inside)
        out = np.where(u <= self.phi[0], 0.0, out)
        return out if out.ndim else float(out)


def potential_from_recipe(recipe: Mapping[str, Any]) -> Potential:
    """Build a potential from its JSON recipe (see README for the schema)."""
    if not isinstance(recipe, Mapping) or "family" not in recipe:
        raise MeasureError("measure recipe needs a 'family' field")
    fam = recipe["family"]
    if fam == "power":
        return PowerPotential(recipe["p"], recipe.get("scale", 1.0))
    if fam == "power-log":
        return PowerLogPotential(recipe["p"], recipe["alpha"], recipe.get("gamma", "auto"))
    if fam == "nonconvex-example":
        return NonConvexExamplePotential(recipe["alpha"], recipe.get("eps", 0.5))
    if fam == "table":
        return TabulatedPotential(recipe["x"], recipe["phi"])
    if fam == "smoothed":
        return SmoothedPotential(potential_from_recipe(recipe["base"]), recipe.get("a", 1.0))
    raise MeasureError(f"unknown measure family {fam!r}")


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------


class LineMeasure:
    """Normalised measure ``exp(-Phi(|x|)) dx / Z`` truncated to ``[-X, X]``.

    Construction builds a table of panel masses on ``[0, X]``; tail masses are
    accumulated from the right so they stay relatively accurate down to the
    truncation level. Instances are immutable after construction.
    """

    def __init__(self, potential: Potential, n_panels: int = 4096, truncation_scale: float = 1.0,
                 tail_target: float = TAIL_TARGET):
        self.potential = potential
        phi = potential.value

        # tail of exp(-Phi) beyond a point, by adaptive quadrature
        def raw_tail(x):
            val, _ = integrate.quad(lambda y: math.exp(-float(phi(y))), x, np.inf, epsabs=0.0, epsrel=1e-12,
                                    limit=200)
            return val

        head, _ = integrate.quad(lambda y: math.exp(-float(phi(y))), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13,
                                 limit=200)
        z_quad = 2.0 * (head + raw_tail(1.0))
        if not np.isfinite(z_quad) or z_quad <= 0:
            raise MeasureError(f"{potential.family} potential: exp(-Phi) is not integrable")

        X = self._truncation(z_quad, tail_target)
        if isinstance(potential, TabulatedPotential) and potential.x[-1] < X:
            raise MeasureError(
                f"table family: grid ends at {potential.x[-1]:.4g} before the truncation bound {X:.4g}")
        X *= truncation_scale
        self.X = X

        nodes = np.linspace(0.0, X, n_panels + 1)
        extra = [nodes[1] * 2.0 ** -np.arange(1, 31)]
        if isinstance(potential, TabulatedPotential):
            extra.append(potential.x[potential.x < X])
        if isinstance(potential, _PatchedPotential) and potential.eps < X:
            extra.append([potential.eps])
        nodes = np.unique(np.concatenate([nodes, *extra]))
        self.nodes = nodes

        mass = gauss_legendre(lambda y: np.exp(-phi(y)), nodes[:-1], nodes[1:])
        beyond = raw_tail(X)
        total_half = mass.sum() + beyond
        self.Z = 2.0 * total_half
        self.z_quad = z_quad
        # S[k] = mu([nodes[k], inf)) for the normalised measure
        self._S = (np.concatenate([np.cumsum(mass[::-1])[::-1], [0.0]]) + beyond) / self.Z
        self.tail_beyond = beyond / self.Z
        self.median = 0.0
        # log of int_0^{nodes[k]} exp(Phi), for capacities
        phis = phi(nodes)
        scaled = gauss_legendre(lambda y: np.exp(phi(y) - phis[1:, None]), nodes[:-1], nodes[1:])
        with np.errstate(divide="ignore"):
            log_pan = phis[1:] + np.log(scaled)
        self._logJ = np.concatenate([[-np.inf], np.logaddexp.accumulate(log_pan)])

    def _truncation(self, Z: float, target: float) -> float:
        pot = self.potential

        def teq(x):
            d = float(pot.deriv(x))
            if d <= 0:
                return np.inf
            return math.exp(-float(pot.value(x))) / (Z * d)

        hi = 1.0
        while teq(hi) > target or not np.isfinite(teq(hi)):
            hi *= 2.0
            if hi > 1e8:
                raise MeasureError(f"{pot.family} potential: tail never drops below {target}")
        lo = 0.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if teq(mid) > target:
                lo = mid
            else:
                hi = mid
        return hi

    # -- descriptive ------------------------------------------------------

    @property
    def recipe(self) -> dict:
        return self.potential.recipe

    @property
    def symmetric_log_concave(self) -> bool:
        return bool(self.potential.convex)

    def normalization_error(self) -> float:
        """``|1 - mu([-X, X])|`` recomputed by adaptive quadrature."""
        phi = self.potential.value
        val, _ = integrate.quad(lambda y: math.exp(-float(phi(y))), 0.0, self.X, points=[1.0] if self.X > 1 else None,
                                epsabs=0.0, epsrel=1e-13, limit=500)
        return abs(1.0 - 2.0 * val / self.Z)

    # -- density and distribution ----------------------------------------

    def density(self, x):
        x = np.asarray(x, dtype=float)
        out = np.exp(-self.potential.value(np.abs(x))) / self.Z
        return out if out.ndim else float(out)

    def log_density(self, x):
        return -self.potential.value(np.abs(np.asarray(x, dtype=float))) - math.log(self.Z)

    def _tail_scalar(self, x: float) -> float:
        """``mu([x, inf))`` for ``0 <= x <= X``, summed from the right."""
        nodes = self.nodes
        k = int(np.searchsorted(nodes, x, side="right"))
        if k >= nodes.size:
            return float(self._S[-1])
        part = float(gauss_legendre(lambda y: np.exp(-self.potential.value(y)), x, nodes[k]))
        return float(self._S[k]) + part / self.Z

    def sf(self, x):
        """Survival function ``mu([x, inf))``, clamped outside ``[-X, X]``."""
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        for idx, v in np.ndenumerate(x):
            v = float(v)
            if v > self.X:
                out[idx] = 0.0
            elif v < -self.X:
                out[idx] = 1.0
            elif v >= 0:
                out[idx] = self._tail_scalar(v)
            else:
                out[idx] = 1.0 - self._tail_scalar(-v)
        return out if out.ndim else float(out)

    def cdf(self, x):
        """Distribution function ``H(x) = mu((-inf, x])``."""
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        for idx, v in np.ndenumerate(x):
            v = float(v)
            if v < -self.X:
                out[idx] = 0.0
            elif v > self.X:
                out[idx] = 1.0
            elif v <= 0:
                out[idx] = self._tail_scalar(-v)
            else:
                out[idx] = 1.0 - self._tail_scalar(v)
        return out if out.ndim else float(out)

    def _tail_inverse(self, t: float) -> float:
        """The ``y >= 0`` with ``mu([y, inf)) = t``, for ``0 < t <= 1/2``."""
        S = self._S
        if t < S[-1]:
            return self._tail_equivalent_inverse(t)
        # S is decreasing: find panel k with S[k+1] <= t <= S[k]
        k = int(np.searchsorted(-S, -t, side="left")) - 1
        k = min(max(k, 0), self.nodes.size - 2)
        lo, hi = float(self.nodes[k]), float(self.nodes[k + 1])
        x = lo + (hi - lo) * (S[k] - t) / max(S[k] - S[k + 1], 1e-300)
        for _ in range(60):
            g = self._tail_scalar(x) - t
            if abs(g) <= 1e-15 * t:
                break
            if g > 0:
                lo = x
            else:
                hi = x
            step = g / float(self.density(x))
            nxt = x + step
            if not lo < nxt < hi:
                nxt = 0.5 * (lo + hi)
            if abs(nxt - x) <= 1e-16 * max(1.0, abs(x)):
                x = nxt
                break
            x = nxt
        return x

    def _tail_equivalent_inverse(self, t: float) -> float:
        pot = self.potential
        # log of the tail equivalent, so that tiny t do not underflow
        f = lambda y: -float(pot.value(y)) - math.log(self.Z * float(pot.deriv(y))) - math.log(t)  # noqa: E731
        hi = 2.0 * self.X
        while f(hi) > 0:
            hi *= 2.0
        return optimize.brentq(f, self.X, hi, xtol=1e-14, rtol=1e-15)

    def quantile(self, t):
        """Inverse of :meth:`cdf` on ``(0, 1)``."""
        t = np.asarray(t, dtype=float)
        if np.any(~((t > 0) & (t < 1))):
            raise ValueError("quantile: probabilities must lie in the open interval (0, 1)")
        out = np.empty_like(t)
        for idx, v in np.ndenumerate(t):
            v = float(v)
            out[idx] = -self._tail_inverse(v) if v <= 0.5 else self._tail_inverse(1.0 - v)
        return out if out.ndim else float(out)

    def isf(self, t):
        """``x >= 0`` with ``mu([x, inf)) = t`` for ``t <= 1/2`` (no cancellation)."""
        t = np.asarray(t, dtype=float)
        out = np.array([self._tail_inverse(float(v)) for v in t.ravel()]).reshape(t.shape)
        return out if out.ndim else float(out)

    def tail_equivalent(self, y: float) -> float:
        """``exp(-Phi(|y|)) / (Z Phi'(|y|))``, the asymptotic size of ``H(y)``."""
        if y >= 0:
            raise ValueError("tail_equivalent is defined for y < 0")
        d = float(self.potential.deriv(-y))
        if d <= 0:
            raise MeasureError(f"singular derivative: Phi'({-y}) = {d}")
        return math.exp(-float(self.potential.value(-y))) / (self.Z * d)

    def log_inv_density_integral(self, x):
        """``log int_0^{|x|} exp(Phi)``; ``int_x^0 1/rho = Z`` times its exponential."""
        x = np.abs(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        nodes, phi = self.nodes, self.potential.value
        for idx, v in np.ndenumerate(x):
            v = float(v)
            if v == 0.0:
                out[idx] = -np.inf
                continue
            if v > self.X:
                raise ValueError(f"point {v} lies beyond the truncation bound {self.X}")
            k = int(np.searchsorted(nodes, v, side="right")) - 1
            pv = float(phi(v))
            part = float(gauss_legendre(lambda y: np.exp(phi(y) - pv), nodes[k], v))
            with np.errstate(divide="ignore"):
                out[idx] = np.logaddexp(self._logJ[k], pv + math.log(part) if part > 0 else -np.inf)
        return out if out.ndim else float(out)


def build_measure(potential: Potential | Mapping[str, Any], **kwargs) -> LineMeasure:
    if not isinstance(potential, Potential):
        potential = potential_from_recipe(potential)
    return LineMeasure(potential, **kwargs)


def cdf(m: LineMeasure, x):
    return m.cdf(x)


def quantile(m: LineMeasure, t):
    return m.quantile(t)


def tail_equivalent(m: LineMeasure, y: float) -> float:
    return m.tail_equivalent(y)
