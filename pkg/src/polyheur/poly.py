"""Sparse multivariate polynomial arithmetic.

A polynomial is a map from monomial exponent tuples to float coefficients.
The exponent tuple has one nonnegative integer per variable, so ``(2, 1)``
in two variables is x0^2 * x1.  Zero coefficients are never stored; the
zero polynomial has an empty term map and degree 0 by convention.

Monomial bases are enumerated in graded lexicographic order (total degree
first, then lexicographic with earlier variables ranked higher), which
fixes Gram-matrix indexing globally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Monomial = tuple[int, ...]


def _check_monomial(mono: Monomial, nvars: int) -> Monomial:
    mono = tuple(int(e) for e in mono)
    if len(mono) != nvars:
        raise ValueError(f"monomial {mono} has {len(mono)} exponents, expected {nvars}")
    if any(e < 0 for e in mono):
        raise ValueError(f"negative exponent in monomial {mono}")
    return mono


def monomial_degree(mono: Monomial) -> int:
    return sum(mono)


def monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def grlex_key(mono: Monomial):
    # Total degree first; within a degree, x0 ranks before x1 etc., so
    # (1,0) precedes (0,1).
    return (sum(mono), tuple(-e for e in mono))


def monomials_up_to(nvars: int, degree: int) -> list[Monomial]:
    """All exponent tuples of total degree <= degree, graded-lex ordered.

    The count is C(nvars + degree, nvars).
    """
    if nvars < 1:
        raise ValueError("nvars must be >= 1")
    if degree < 0:
        raise ValueError("degree must be >= 0")

    out: list[Monomial] = []

    def fill(prefix: list[int], remaining: int, total: int) -> None:
        if remaining == 1:
            out.append(tuple(prefix + [total]))
            return
        for e in range(total + 1):
            fill(prefix + [e], remaining - 1, total - e)

    for d in range(degree + 1):
        block: list[Monomial] = []
        start = len(out)
        fill([], nvars, d)
        block = out[start:]
        block.sort(key=grlex_key)
        out[start:] = block
    return out


def count_monomials(nvars: int, degree: int) -> int:
    return math.comb(nvars + degree, nvars)


class Polynomial:
    """Sparse polynomial over ``nvars`` real variables.

    Instances are immutable by convention: the term map is private and all
    operations return new objects, so values can be shared freely across
    threads.
    """

    __slots__ = ("nvars", "_terms")

    def __init__(self, nvars: int, terms: dict[Monomial, float] | None = None):
        if nvars < 1:
            raise ValueError("nvars must be >= 1")
        self.nvars = int(nvars)
        clean: dict[Monomial, float] = {}
        if terms:
            for mono, coeff in terms.items():
                mono = _check_monomial(mono, self.nvars)
                c = float(coeff)
                if not math.isfinite(c):
                    raise ValueError(f"non-finite coefficient {c} for {mono}")
                if c != 0.0:
                    clean[mono] = clean.get(mono, 0.0) + c
        self._terms = {m: c for m, c in clean.items() if c != 0.0}

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero(nvars: int) -> "Polynomial":
        return Polynomial(nvars, {})

    @staticmethod
    def constant(nvars: int, value: float) -> "Polynomial":
        return Polynomial(nvars, {(0,) * nvars: value})

    @staticmethod
    def variable(nvars: int, index: int) -> "Polynomial":
        if not 0 <= index < nvars:
            raise ValueError(f"variable index {index} out of range for nvars={nvars}")
        mono = tuple(1 if i == index else 0 for i in range(nvars))
        return Polynomial(nvars, {mono: 1.0})

    @staticmethod
    def monomial(nvars: int, mono: Monomial, coeff: float = 1.0) -> "Polynomial":
        return Polynomial(nvars, {tuple(mono): coeff})

    # -- accessors ----------------------------------------------------

    @property
    def terms(self) -> dict[Monomial, float]:
        return dict(self._terms)

    def coeff(self, mono: Monomial) -> float:
        return self._terms.get(tuple(mono), 0.0)

    def degree(self) -> int:
        if not self._terms:
            return 0
        return max(sum(m) for m in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def support_vars(self) -> list[int]:
        """Indices of variables that appear with a positive exponent."""
        used = [False] * self.nvars
        for mono in self._terms:
            for i, e in enumerate(mono):
                if e > 0:
                    used[i] = True
        return [i for i, u in enumerate(used) if u]

    # -- arithmetic ---------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError(
                    f"variable count mismatch: {self.nvars} vs {other.nvars}"
                )
            return other
        if isinstance(other, (int, float)):
            return Polynomial.constant(self.nvars, float(other))
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out = dict(self._terms)
        for mono, coeff in other._terms.items():
            out[mono] = out.get(mono, 0.0) + coeff
        return Polynomial(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.nvars, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out: dict[Monomial, float] = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                mono = monomial_mul(ma, mb)
                out[mono] = out.get(mono, 0.0) + ca * cb
        return Polynomial(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Polynomial":
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = Polynomial.constant(self.nvars, 1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self._terms.items())))

    def allclose(self, other: "Polynomial", tol: float = 1e-12) -> bool:
        diff = self - other
        return all(abs(c) <= tol for c in diff._terms.values())

    def max_abs_coeff(self) -> float:
        if not self._terms:
            return 0.0
        return max(abs(c) for c in self._terms.values())

    # -- evaluation ---------------------------------------------------

    def eval(self, point) -> float:
        """Evaluate at a single point (sequence of nvars finite floats)."""
        pt = np.asarray(point, dtype=float).reshape(-1)
        if pt.shape[0] != self.nvars:
            raise ValueError(f"point has dimension {pt.shape[0]}, expected {self.nvars}")
        if not np.all(np.isfinite(pt)):
            raise ValueError("non-finite evaluation point")
        total = 0.0
        for mono, coeff in self._terms.items():
            term = coeff
            for i, e in enumerate(mono):
                if e:
                    term *= pt[i] ** e
            total += term
        return float(total)

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at an (N, nvars) array of points; returns shape (N,)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.nvars:
            raise ValueError(f"expected (N, {self.nvars}) array, got {pts.shape}")
        out = np.zeros(pts.shape[0])
        for mono, coeff in self._terms.items():
            term = np.full(pts.shape[0], coeff)
            for i, e in enumerate(mono):
                if e:
                    term = term * pts[:, i] ** e
            out += term
        return out

    def __call__(self, *args) -> float:
        if len(args) == 1 and np.ndim(args[0]) >= 1:
            return self.eval(args[0])
        return self.eval(args)

    # -- calculus -----------------------------------------------------

    def diff(self, index: int) -> "Polynomial":
        """Partial derivative with respect to variable ``index``."""
        if not 0 <= index < self.nvars:
            raise ValueError(f"variable index {index} out of range")
        out: dict[Monomial, float] = {}
        for mono, coeff in self._terms.items():
            e = mono[index]
            if e == 0:
                continue
            lowered = list(mono)
            lowered[index] = e - 1
            key = tuple(lowered)
            out[key] = out.get(key, 0.0) + coeff * e
        return Polynomial(self.nvars, out)

    def grad(self) -> "PolyVector":
        return PolyVector([self.diff(i) for i in range(self.nvars)])

    # -- embedding ----------------------------------------------------

    def embed(self, nvars: int, var_map: list[int]) -> "Polynomial":
        """Re-express over a larger variable space.

        ``var_map[i]`` is the index in the target space of this
        polynomial's variable i.
        """
        if len(var_map) != self.nvars:
            raise ValueError("var_map length must equal nvars")
        out: dict[Monomial, float] = {}
        for mono, coeff in self._terms.items():
            target = [0] * nvars
            for i, e in enumerate(mono):
                target[var_map[i]] += e
            out[tuple(target)] = out.get(tuple(target), 0.0) + coeff
        return Polynomial(nvars, out)

    # -- formatting ---------------------------------------------------

    def __repr__(self) -> str:
        if not self._terms:
            return "Polynomial(0)"
        parts = []
        for mono in sorted(self._terms, key=grlex_key):
            coeff = self._terms[mono]
            factors = [f"{coeff:g}"]
            for i, e in enumerate(mono):
                if e == 1:
                    factors.append(f"x{i}")
                elif e > 1:
                    factors.append(f"x{i}^{e}")
            parts.append("*".join(factors))
        return "Polynomial(" + " + ".join(parts) + ")"


@dataclass(frozen=True)
class PolyVector:
    """Ordered tuple of polynomials over a common variable space."""

    components: tuple[Polynomial, ...]

    def __init__(self, components):
        comps = tuple(components)
        if not comps:
            raise ValueError("PolyVector must be nonempty")
        nvars = comps[0].nvars
        if any(p.nvars != nvars for p in comps):
            raise ValueError("all components must share nvars")
        object.__setattr__(self, "components", comps)

    @property
    def nvars(self) -> int:
        return self.components[0].nvars

    def __len__(self) -> int:
        return len(self.components)

    def __getitem__(self, i: int) -> Polynomial:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def eval(self, point) -> np.ndarray:
        return np.array([p.eval(point) for p in self.components])

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at (N, nvars) points; returns (N, len(self))."""
        return np.stack([p.eval_many(points) for p in self.components], axis=1)

    def dot(self, other: "PolyVector") -> Polynomial:
        if len(other) != len(self):
            raise ValueError("length mismatch in dot product")
        acc = Polynomial.zero(self.nvars)
        for a, b in zip(self.components, other.components):
            acc = acc + a * b
        return acc


def poly_from_records(nvars: int, records) -> Polynomial:
    """Build a polynomial from {exponents, coefficient} records."""
    terms: dict[Monomial, float] = {}
    for rec in records:
        mono = _check_monomial(tuple(rec["exponents"]), nvars)
        terms[mono] = terms.get(mono, 0.0) + float(rec["coefficient"])
    return Polynomial(nvars, terms)


def poly_to_records(p: Polynomial) -> list[dict]:
    """Serialize to a stable list of {exponents, coefficient} records."""
    return [
        {"exponents": list(mono), "coefficient": p.coeff(mono)}
        for mono in sorted(p.terms, key=grlex_key)
    ]
