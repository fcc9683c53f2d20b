"""Semialgebraic sets, goal specifications, and measures.

A set is the conjunction of polynomial inequalities h_i(z) >= 0; an empty
constraint list means the whole space.  Measures supply the monomial
moments that define the synthesis objective: either a weighted sum of
point atoms or the Lebesgue measure restricted to an axis-aligned box.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .poly import Monomial, Polynomial

MEMBERSHIP_TOL = 1e-12


@dataclass(frozen=True)
class SemialgebraicSet:
    """{z : h(z) >= 0 for every constraint h}."""

    nvars: int
    constraints: tuple[Polynomial, ...] = ()

    def __init__(self, nvars: int, constraints=()):
        cons = tuple(constraints)
        if any(p.nvars != nvars for p in cons):
            raise ValueError("constraint nvars mismatch")
        object.__setattr__(self, "nvars", int(nvars))
        object.__setattr__(self, "constraints", cons)

    def contains(self, z) -> bool:
        z = np.asarray(z, dtype=float).reshape(-1)
        if z.shape[0] != self.nvars:
            raise ValueError(f"point dimension {z.shape[0]}, expected {self.nvars}")
        return all(h.eval(z) >= -MEMBERSHIP_TOL for h in self.constraints)

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorized membership for an (N, nvars) array."""
        pts = np.asarray(points, dtype=float)
        mask = np.ones(pts.shape[0], dtype=bool)
        for h in self.constraints:
            mask &= h.eval_many(pts) >= -MEMBERSHIP_TOL
        return mask

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-axis bounds recovered from single-variable constraints.

        Recognizes the quadratic encoding (hi - x)(x - lo) and linear
        one-sided bounds.  Raises if any axis remains unbounded, since a
        sampling box cannot be derived then.
        """
        lo = np.full(self.nvars, -np.inf)
        hi = np.full(self.nvars, np.inf)
        for h in self.constraints:
            sup = h.support_vars()
            if len(sup) != 1:
                continue
            i = sup[0]
            a2 = h.coeff(tuple(2 if j == i else 0 for j in range(self.nvars)))
            a1 = h.coeff(tuple(1 if j == i else 0 for j in range(self.nvars)))
            a0 = h.coeff((0,) * self.nvars)
            if a2 < 0.0:
                # a2 x^2 + a1 x + a0 >= 0 with a2 < 0: between the roots.
                disc = a1 * a1 - 4.0 * a2 * a0
                if disc < 0.0:
                    continue
                r = np.sqrt(disc)
                lo_i = (-a1 + r) / (2.0 * a2)
                hi_i = (-a1 - r) / (2.0 * a2)
                lo[i] = max(lo[i], min(lo_i, hi_i))
                hi[i] = min(hi[i], max(lo_i, hi_i))
            elif a2 == 0.0 and a1 > 0.0:
                lo[i] = max(lo[i], -a0 / a1)
            elif a2 == 0.0 and a1 < 0.0:
                hi[i] = min(hi[i], -a0 / a1)
        if np.any(~np.isfinite(lo)) or np.any(~np.isfinite(hi)):
            raise ValueError(
                "cannot derive a bounding box: set is unbounded along some axis"
            )
        return lo, hi


def box(lo, hi) -> SemialgebraicSet:
    """Axis-aligned box as one quadratic constraint per axis:
    (hi_i - x_i)(x_i - lo_i) >= 0."""
    lo = np.asarray(lo, dtype=float).reshape(-1)
    hi = np.asarray(hi, dtype=float).reshape(-1)
    if lo.shape != hi.shape:
        raise ValueError("lo and hi must have the same length")
    if np.any(lo >= hi):
        raise ValueError(f"degenerate interval: lo={lo}, hi={hi}")
    n = lo.shape[0]
    cons = []
    for i in range(n):
        x = Polynomial.variable(n, i)
        cons.append((hi[i] - x) * (x - lo[i]))
    return SemialgebraicSet(n, cons)


def whole_space(nvars: int) -> SemialgebraicSet:
    return SemialgebraicSet(nvars, ())


def ball(nvars: int, radius: float = 1.0, center=None) -> SemialgebraicSet:
    """{z : radius^2 - ||z - center||^2 >= 0}."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    c = np.zeros(nvars) if center is None else np.asarray(center, dtype=float)
    p = Polynomial.constant(nvars, radius * radius)
    for i in range(nvars):
        x = Polynomial.variable(nvars, i)
        p = p - (x - c[i]) * (x - c[i])
    return SemialgebraicSet(nvars, (p,))


@dataclass(frozen=True)
class GoalSpec:
    """Goal region: a single point or a semialgebraic set."""

    point: np.ndarray | None = None
    region: SemialgebraicSet | None = None

    def __post_init__(self):
        if (self.point is None) == (self.region is None):
            raise ValueError("GoalSpec needs exactly one of point or region")
        if self.point is not None:
            object.__setattr__(
                self, "point", np.asarray(self.point, dtype=float).reshape(-1)
            )

    @staticmethod
    def at_point(z) -> "GoalSpec":
        return GoalSpec(point=np.asarray(z, dtype=float))

    @staticmethod
    def in_set(region: SemialgebraicSet) -> "GoalSpec":
        return GoalSpec(region=region)

    @property
    def is_point(self) -> bool:
        return self.point is not None

    def nvars(self) -> int:
        if self.point is not None:
            return self.point.shape[0]
        return self.region.nvars

    def contains(self, z, tol: float = 1e-9) -> bool:
        if self.point is not None:
            return bool(np.max(np.abs(np.asarray(z, float) - self.point)) <= tol)
        return self.region.contains(z)


class Measure:
    """Positive measure on the state space: discrete atoms or Lebesgue on
    a box.  Only monomial moments are ever queried."""

    def __init__(self, *, atoms=None, box_lo=None, box_hi=None):
        if atoms is not None:
            if box_lo is not None or box_hi is not None:
                raise ValueError("measure is either discrete or box-Lebesgue")
            pts = []
            wts = []
            for point, weight in atoms:
                w = float(weight)
                if w <= 0.0:
                    raise ValueError("atom weights must be positive")
                pts.append(np.asarray(point, dtype=float).reshape(-1))
                wts.append(w)
            if not pts:
                raise ValueError("discrete measure needs at least one atom")
            dims = {p.shape[0] for p in pts}
            if len(dims) != 1:
                raise ValueError("atoms must share a dimension")
            self.atoms = list(zip(pts, wts))
            self.lo = None
            self.hi = None
            self._nvars = pts[0].shape[0]
        else:
            lo = np.asarray(box_lo, dtype=float).reshape(-1)
            hi = np.asarray(box_hi, dtype=float).reshape(-1)
            if lo.shape != hi.shape or np.any(lo >= hi):
                raise ValueError("box measure needs lo < hi componentwise")
            self.atoms = None
            self.lo = lo
            self.hi = hi
            self._nvars = lo.shape[0]

    @staticmethod
    def discrete(atoms) -> "Measure":
        return Measure(atoms=list(atoms))

    @staticmethod
    def box_lebesgue(lo, hi) -> "Measure":
        return Measure(box_lo=lo, box_hi=hi)

    @property
    def nvars(self) -> int:
        return self._nvars

    @property
    def is_discrete(self) -> bool:
        return self.atoms is not None

    def support_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.is_discrete:
            pts = np.stack([p for p, _ in self.atoms])
            return pts.min(axis=0), pts.max(axis=0)
        return self.lo.copy(), self.hi.copy()

    def moment(self, mono: Monomial) -> float:
        """Integral of the monomial z^mono against this measure."""
        mono = tuple(int(e) for e in mono)
        if len(mono) != self._nvars:
            raise ValueError(
                f"monomial dimension {len(mono)}, expected {self._nvars}"
            )
        if self.is_discrete:
            total = 0.0
            for point, weight in self.atoms:
                term = weight
                for i, e in enumerate(mono):
                    if e:
                        term *= point[i] ** e
                total += term
            return total
        # Product of one-dimensional integrals over [lo_i, hi_i].
        total = 1.0
        for i, e in enumerate(mono):
            total *= (self.hi[i] ** (e + 1) - self.lo[i] ** (e + 1)) / (e + 1)
        return total

    def objective_vector(self, basis: list[Monomial]) -> np.ndarray:
        """Moments of each basis monomial; the synthesis objective is the
        dot product of this with the heuristic's coefficient vector."""
        return np.array([self.moment(m) for m in basis])

    def integral(self, p: Polynomial) -> float:
        return sum(c * self.moment(m) for m, c in p.terms.items())
