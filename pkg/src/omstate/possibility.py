"""Possibility-function families and their pointwise algebra.

A possibility function maps a state space to [0, 1] with supremum exactly 1.
Four concrete families are supported: Gaussian, indicator (box or finite point
set), grid (finite-space carrier) and max-mixtures of Gaussians.  Products and
supremum queries are closed-form where the family table allows it, and fall
back to a user-resolution grid (flagged approximate) where it does not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, UnsupportedFamilyError, ValidationError

COND_LIMIT = 1e12


def _as_vector(x, dim=None):
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValidationError(f"expected a vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {v.shape[0]}")
    return v


def validate_spread(P):
    """Check symmetry and positive definiteness; return the Cholesky factor."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape[0] != P.shape[1]:
        raise ValidationError(f"spread matrix must be square, got {P.shape}")
    if not np.allclose(P, P.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(P).max())):
        raise ValidationError("spread matrix must be symmetric")
    try:
        L = np.linalg.cholesky(P)
    except np.linalg.LinAlgError as exc:
        raise ValidationError("spread matrix is not positive definite") from exc
    if np.any(np.diag(L) <= 0.0):
        raise ValidationError("spread factorization has non-positive diagonal")
    if np.linalg.cond(P) > COND_LIMIT:
        raise ValidationError("spread matrix condition number exceeds 1e12")
    return L


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lo_1, hi_1] x ... x [lo_d, hi_d]; infinite bounds allowed."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _as_vector(self.lo)
        hi = _as_vector(self.hi, lo.shape[0])
        if np.any(lo > hi):
            raise ValidationError("box has lo > hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.shape[0]

    def contains(self, x):
        x = _as_vector(x, self.dim)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))

    def intersect(self, other):
        """Intersection with another box, or None if empty."""
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(lo > hi):
            return None
        return Box(lo, hi)

    def clamp(self, x):
        return np.clip(_as_vector(x, self.dim), self.lo, self.hi)

    def is_whole(self):
        return bool(np.all(np.isinf(self.lo)) and np.all(np.isinf(self.hi)))


def whole_space(dim):
    return Box(np.full(dim, -np.inf), np.full(dim, np.inf))


@dataclass(frozen=True)
class WholeSpace:
    dim: int


@dataclass(frozen=True)
class PointSet:
    points: np.ndarray  # (n, d)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", pts)

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def contains(self, x, tol=1e-12):
        x = _as_vector(x, self.dim)
        if len(self) == 0:
            return False
        return bool(np.any(np.all(np.abs(self.points - x) <= tol, axis=1)))


# ---------------------------------------------------------------------------
# families


class PossibilityFunction:
    """Base class; concrete families implement __call__ on state vectors."""

    dim: int

    def __call__(self, x):  # pragma: no cover - abstract
        raise NotImplementedError

    def family(self):
        return type(self).__name__


class GaussianPossibility(PossibilityFunction):
    """exp(-0.5 (x-m)' P^{-1} (x-m)) with mean m and positive-definite spread P."""

    def __init__(self, mean, spread):
        self.mean = _as_vector(mean)
        self.spread = np.atleast_2d(np.asarray(spread, dtype=float))
        if self.spread.shape != (self.mean.shape[0], self.mean.shape[0]):
            raise DimensionMismatchError("mean and spread dimensions disagree")
        self._chol = validate_spread(self.spread)
        self.dim = self.mean.shape[0]

    def log_eval(self, x):
        dx = _as_vector(x, self.dim) - self.mean
        z = np.linalg.solve(self._chol, dx)
        return -0.5 * float(z @ z)

    def __call__(self, x):
        return math.exp(self.log_eval(x))

    def is_diagonal(self, tol=1e-12):
        off = self.spread - np.diag(np.diag(self.spread))
        return bool(np.all(np.abs(off) <= tol))

    def __repr__(self):
        return f"GaussianPossibility(mean={self.mean!r}, spread={self.spread!r})"


class IndicatorPossibility(PossibilityFunction):
    """Indicator of a nonempty axis-aligned box or finite point set."""

    def __init__(self, support):
        if isinstance(support, PointSet) and len(support) == 0:
            raise ValidationError("indicator support is empty")
        if not isinstance(support, (Box, PointSet)):
            raise ValidationError("indicator support must be a Box or PointSet")
        self.support = support
        self.dim = support.dim

    def __call__(self, x):
        return 1.0 if self.support.contains(x) else 0.0

    def __repr__(self):
        return f"IndicatorPossibility({self.support!r})"


class GridPossibility(PossibilityFunction):
    """Values in [0, 1] on a finite ordered point list, with max exactly 1."""

    def __init__(self, points, values, normalized=True):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.values = _as_vector(values)
        if self.points.shape[0] != self.values.shape[0]:
            raise ValidationError("points and values lengths differ")
        if np.any(self.values < 0.0) or np.any(self.values > 1.0 + 1e-12):
            raise ValidationError("grid values must lie in [0, 1]")
        vmax = self.values.max(initial=-np.inf)
        if normalized:
            if abs(vmax - 1.0) > 1e-9:
                raise ValidationError(f"grid values must have max 1, got {vmax}")
            self.values = np.minimum(self.values / vmax, 1.0)
        elif vmax <= 0.0:
            raise ValidationError("grid values are identically zero")
        self.dim = self.points.shape[1]

    @classmethod
    def from_raw(cls, points, values):
        """Normalize arbitrary nonnegative values; return (possibility, scale)."""
        values = _as_vector(values)
        scale = float(values.max(initial=0.0))
        if scale <= 0.0:
            return None, 0.0
        return cls(points, values / scale), scale

    def index_of(self, x, tol=1e-12):
        x = _as_vector(x, self.dim)
        hits = np.where(np.all(np.abs(self.points - x) <= tol, axis=1))[0]
        if hits.size == 0:
            raise ValidationError(f"state {x} is not a grid point")
        return int(hits[0])

    def __call__(self, x):
        return float(self.values[self.index_of(x)])

    def same_points(self, other, tol=1e-12):
        return (
            self.points.shape == other.points.shape
            and bool(np.all(np.abs(self.points - other.points) <= tol))
        )

    def __repr__(self):
        return f"GridPossibility(n={self.points.shape[0]}, dim={self.dim})"


class MaxMixture(PossibilityFunction):
    """Pointwise max of weighted Gaussian possibilities, max weight exactly 1."""

    def __init__(self, components):
        comps = []
        for w, g in components:
            w = float(w)
            if not (0.0 < w <= 1.0 + 1e-12):
                raise ValidationError("mixture weights must lie in (0, 1]")
            if not isinstance(g, GaussianPossibility):
                raise ValidationError("mixture components must be Gaussian")
            comps.append((min(w, 1.0), g))
        if not comps:
            raise ValidationError("mixture needs at least one component")
        wmax = max(w for w, _ in comps)
        if abs(wmax - 1.0) > 1e-9:
            raise ValidationError(f"mixture max weight must be 1, got {wmax}")
        self.components = [(w / wmax, g) for w, g in comps]
        self.dim = comps[0][1].dim
        if any(g.dim != self.dim for _, g in comps):
            raise DimensionMismatchError("mixture components on different spaces")

    @classmethod
    def from_raw(cls, components):
        """Renormalize so the max weight is 1; return (mixture, scale)."""
        comps = [(float(w), g) for w, g in components if float(w) > 0.0]
        if not comps:
            return None, 0.0
        scale = max(w for w, _ in comps)
        return cls([(w / scale, g) for w, g in comps]), scale

    def __call__(self, x):
        return max(w * g(x) for w, g in self.components)

    def __repr__(self):
        return f"MaxMixture(n={len(self.components)}, dim={self.dim})"


@dataclass
class ScaledFunction:
    """A possibility function together with the recorded supremum of a raw product.

    ``scale == 0`` marks a degenerate (everywhere-zero) product; ``base`` is
    then None.  ``approximate`` flags grid-fallback results.
    """

    base: PossibilityFunction | None
    scale: float
    approximate: bool = False

    def __call__(self, x):
        if self.base is None:
            return 0.0
        return self.scale * self.base(x)


def vacuous(dim):
    """The indicator of the whole space; the neutral element of product."""
    return IndicatorPossibility(whole_space(dim))


def is_vacuous(f):
    return (
        isinstance(f, IndicatorPossibility)
        and isinstance(f.support, Box)
        and f.support.is_whole()
    )


# ---------------------------------------------------------------------------
# evaluation and supremum queries


def evaluate(f, x):
    """Evaluate a possibility function at a state vector."""
    return f(x)


def _gaussian_box_sup(g: GaussianPossibility, box: Box, grid_res):
    if g.is_diagonal():
        return g(box.clamp(g.mean)), False
    if grid_res is None:
        raise UnsupportedFamilyError(
            "box supremum of a non-diagonal Gaussian needs a grid fallback resolution"
        )
    pts = _box_grid(box, g, grid_res)
    return float(max(g(p) for p in pts)), True


def _box_grid(box: Box, g: GaussianPossibility, grid_res):
    """Sample points of a box, truncating infinite sides around the Gaussian mean."""
    sd = np.sqrt(np.diag(g.spread))
    lo = np.where(np.isinf(box.lo), g.mean - 8.0 * sd, box.lo)
    hi = np.where(np.isinf(box.hi), g.mean + 8.0 * sd, box.hi)
    axes = [np.linspace(lo[k], hi[k], grid_res) for k in range(box.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def sup_over(f, region, grid_res=None):
    """Supremum of f over a Box, WholeSpace or PointSet region."""
    if isinstance(region, WholeSpace) or (isinstance(region, Box) and region.is_whole()):
        return 1.0
    if isinstance(region, PointSet):
        if len(region) == 0:
            return 0.0
        if isinstance(f, GridPossibility):
            vals = [
                f.values[f.index_of(p)]
                if _point_on_grid(f, p)
                else 0.0
                for p in region.points
            ]
            return float(max(vals))
        return float(max(f(p) for p in region.points))
    if not isinstance(region, Box):
        raise ValidationError(f"unsupported region type {type(region).__name__}")

    if isinstance(f, GaussianPossibility):
        val, _ = _gaussian_box_sup(f, region, grid_res)
        return val
    if isinstance(f, IndicatorPossibility):
        if isinstance(f.support, Box):
            return 1.0 if f.support.intersect(region) is not None else 0.0
        inside = [p for p in f.support.points if region.contains(p)]
        return 1.0 if inside else 0.0
    if isinstance(f, GridPossibility):
        mask = np.array([region.contains(p) for p in f.points])
        return float(f.values[mask].max(initial=0.0))
    if isinstance(f, MaxMixture):
        return max(w * sup_over(g, region, grid_res) for w, g in f.components)
    raise UnsupportedFamilyError(f"sup_over not supported for {f.family()}")


def _point_on_grid(f: GridPossibility, p, tol=1e-12):
    return bool(np.any(np.all(np.abs(f.points - _as_vector(p, f.dim)) <= tol, axis=1)))


# ---------------------------------------------------------------------------
# products


def _gaussian_pair_product(a: GaussianPossibility, b: GaussianPossibility):
    """Complete the square: N(m1,P1) N(m2,P2) = scale * N(m, C)."""
    S = a.spread + b.spread
    d = b.mean - a.mean
    sol = np.linalg.solve(S, d)
    scale = math.exp(-0.5 * float(d @ sol))
    gain = a.spread @ np.linalg.inv(S)
    m = a.mean + gain @ d
    C = a.spread - gain @ a.spread
    C = 0.5 * (C + C.T)
    return GaussianPossibility(m, C), scale


def _indicator_pair_product(a: IndicatorPossibility, b: IndicatorPossibility):
    sa, sb = a.support, b.support
    if isinstance(sa, Box) and isinstance(sb, Box):
        inter = sa.intersect(sb)
        if inter is None:
            return None, 0.0
        return IndicatorPossibility(inter), 1.0
    if isinstance(sa, PointSet) and isinstance(sb, Box):
        sa, sb = sb, sa
    if isinstance(sa, Box) and isinstance(sb, PointSet):
        pts = np.array([p for p in sb.points if sa.contains(p)])
        if pts.size == 0:
            return None, 0.0
        return IndicatorPossibility(PointSet(pts)), 1.0
    # point set x point set
    pts = np.array([p for p in sa.points if sb.contains(p)])
    if pts.size == 0:
        return None, 0.0
    return IndicatorPossibility(PointSet(pts)), 1.0


def _grid_scalar_product(g: GridPossibility, other):
    """Grid times any pointwise-evaluable factor, restricted to the grid points."""
    other_vals = np.array([other(p) for p in g.points])
    base, scale = GridPossibility.from_raw(g.points, g.values * other_vals)
    return base, scale


def _indicator_gaussian_product(ind: IndicatorPossibility, g: GaussianPossibility, grid_res):
    if isinstance(ind.support, PointSet):
        # exact: the product lives on finitely many points
        vals = np.array([g(p) for p in ind.support.points])
        base, scale = GridPossibility.from_raw(ind.support.points, vals)
        return ScaledFunction(base, scale)
    box = ind.support
    if box.is_whole():
        return ScaledFunction(g, 1.0)
    if g.is_diagonal():
        scale = g(box.clamp(g.mean))
        approx_exact_scale = True
    else:
        scale = None
        approx_exact_scale = False
    if grid_res is None:
        raise UnsupportedFamilyError(
            "indicator x Gaussian product needs a grid fallback resolution"
        )
    pts = _box_grid(box, g, grid_res)
    vals = np.array([g(p) for p in pts])
    if scale is None:
        scale = float(vals.max(initial=0.0))
    if scale <= 0.0:
        return ScaledFunction(None, 0.0)
    base, _ = GridPossibility.from_raw(pts, vals)
    return ScaledFunction(base, float(scale), approximate=True)


def product(f, g, grid_res=None):
    """Pointwise product of two possibility functions as a ScaledFunction.

    The returned base has supremum 1 and the scale is the supremum of the raw
    product, so that ``scale * base(x) == f(x) * g(x)`` pointwise.
    """
    if f.dim != g.dim:
        raise DimensionMismatchError("product operands on different spaces")
    if is_vacuous(g):
        return ScaledFunction(f, 1.0)
    if is_vacuous(f):
        return ScaledFunction(g, 1.0)

    if isinstance(f, GaussianPossibility) and isinstance(g, GaussianPossibility):
        base, scale = _gaussian_pair_product(f, g)
        return ScaledFunction(base, scale)
    if isinstance(f, IndicatorPossibility) and isinstance(g, IndicatorPossibility):
        base, scale = _indicator_pair_product(f, g)
        return ScaledFunction(base, scale)
    if isinstance(f, GridPossibility) and isinstance(g, GridPossibility):
        if not f.same_points(g):
            raise UnsupportedFamilyError("grid product requires identical point lists")
        base, scale = GridPossibility.from_raw(f.points, f.values * g.values)
        return ScaledFunction(base, scale)
    if isinstance(f, GridPossibility):
        base, scale = _grid_scalar_product(f, g)
        return ScaledFunction(base, scale)
    if isinstance(g, GridPossibility):
        base, scale = _grid_scalar_product(g, f)
        return ScaledFunction(base, scale)
    if isinstance(f, IndicatorPossibility) and isinstance(g, GaussianPossibility):
        return _indicator_gaussian_product(f, g, grid_res)
    if isinstance(f, GaussianPossibility) and isinstance(g, IndicatorPossibility):
        return _indicator_gaussian_product(g, f, grid_res)
    if isinstance(f, MaxMixture) or isinstance(g, MaxMixture):
        return _mixture_product(f, g, grid_res)
    raise UnsupportedFamilyError(
        f"product not supported for {f.family()} x {g.family()}"
    )


def _mixture_product(f, g, grid_res):
    """Distribute a product over max-mixture components."""
    fc = f.components if isinstance(f, MaxMixture) else [(1.0, f)]
    gc = g.components if isinstance(g, MaxMixture) else [(1.0, g)]
    raw = []
    approximate = False
    for wf, cf in fc:
        for wg, cg in gc:
            sf = product(cf, cg, grid_res=grid_res)
            approximate = approximate or sf.approximate
            if sf.scale > 0.0:
                raw.append((wf * wg * sf.scale, sf.base))
    if not raw:
        return ScaledFunction(None, 0.0)
    if all(isinstance(b, GaussianPossibility) for _, b in raw):
        mix, scale = MaxMixture.from_raw(raw)
        if len(mix.components) == 1 and abs(mix.components[0][0] - 1.0) < 1e-15:
            return ScaledFunction(mix.components[0][1], scale, approximate)
        return ScaledFunction(mix, scale, approximate)
    raise UnsupportedFamilyError("mixture product components must stay Gaussian")


# ---------------------------------------------------------------------------
# fingerprints and serialization


def fingerprint(f, digits=12):
    """Hashable identity of a possibility function, parameters rounded."""

    def r(a):
        return tuple(np.round(np.asarray(a, dtype=float).ravel(), digits))

    if isinstance(f, GaussianPossibility):
        return ("gaussian", f.dim, r(f.mean), r(f.spread))
    if isinstance(f, IndicatorPossibility):
        if isinstance(f.support, Box):
            return ("indicator-box", f.dim, r(f.support.lo), r(f.support.hi))
        pts = f.support.points
        order = np.lexsort(pts.T[::-1])
        return ("indicator-points", f.dim, r(pts[order]))
    if isinstance(f, GridPossibility):
        return ("grid", f.dim, r(f.points), r(f.values))
    if isinstance(f, MaxMixture):
        comps = sorted(
            (round(w, digits),) + fingerprint(g, digits) for w, g in f.components
        )
        return ("max-mixture", f.dim, tuple(comps))
    raise UnsupportedFamilyError(f"no fingerprint for {f.family()}")


def _fmt(values):
    return " ".join(format(float(v), ".17g") for v in np.asarray(values).ravel())


def to_record(f):
    """Serialize to a one-line structured text record."""
    if isinstance(f, GaussianPossibility):
        return f"gaussian {f.dim} {_fmt(f.mean)} {_fmt(f.spread)}"
    if isinstance(f, IndicatorPossibility):
        if isinstance(f.support, Box):
            return f"indicator-box {f.dim} {_fmt(f.support.lo)} {_fmt(f.support.hi)}"
        pts = f.support.points
        return f"indicator-points {f.dim} {pts.shape[0]} {_fmt(pts)}"
    if isinstance(f, GridPossibility):
        n = f.points.shape[0]
        return f"grid {f.dim} {n} {_fmt(f.points)} {_fmt(f.values)}"
    if isinstance(f, MaxMixture):
        parts = [f"max-mixture {f.dim} {len(f.components)}"]
        for w, g in f.components:
            parts.append(f"{format(w, '.17g')} {_fmt(g.mean)} {_fmt(g.spread)}")
        return " ".join(parts)
    raise UnsupportedFamilyError(f"no serialization for {f.family()}")


def from_record(text):
    """Parse a record produced by to_record."""
    tokens = text.split()
    if not tokens:
        raise ValidationError("empty possibility record")
    tag = tokens[0]
    try:
        if tag == "gaussian":
            d = int(tokens[1])
            nums = np.array(tokens[2:], dtype=float)
            if nums.size != d + d * d:
                raise ValidationError("gaussian record has wrong length")
            return GaussianPossibility(nums[:d], nums[d:].reshape(d, d))
        if tag == "indicator-box":
            d = int(tokens[1])
            nums = np.array(tokens[2:], dtype=float)
            if nums.size != 2 * d:
                raise ValidationError("indicator-box record has wrong length")
            return IndicatorPossibility(Box(nums[:d], nums[d:]))
        if tag == "indicator-points":
            d, n = int(tokens[1]), int(tokens[2])
            nums = np.array(tokens[3:], dtype=float)
            if nums.size != n * d:
                raise ValidationError("indicator-points record has wrong length")
            return IndicatorPossibility(PointSet(nums.reshape(n, d)))
        if tag == "grid":
            d, n = int(tokens[1]), int(tokens[2])
            nums = np.array(tokens[3:], dtype=float)
            if nums.size != n * d + n:
                raise ValidationError("grid record has wrong length")
            return GridPossibility(nums[: n * d].reshape(n, d), nums[n * d :])
        if tag == "max-mixture":
            d, n = int(tokens[1]), int(tokens[2])
            nums = np.array(tokens[3:], dtype=float)
            per = 1 + d + d * d
            if nums.size != n * per:
                raise ValidationError("max-mixture record has wrong length")
            comps = []
            for i in range(n):
                blk = nums[i * per : (i + 1) * per]
                comps.append(
                    (blk[0], GaussianPossibility(blk[1 : 1 + d], blk[1 + d :].reshape(d, d)))
                )
            return MaxMixture(comps)
    except (ValueError, IndexError) as exc:
        raise ValidationError(f"malformed possibility record: {text[:80]}") from exc
    raise ValidationError(f"unknown possibility family tag {tag!r}")
