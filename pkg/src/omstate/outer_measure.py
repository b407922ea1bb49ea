"""Finite-support distributions over possibility functions.

A FiniteOuterMeasure is a probability-weighted finite collection of
possibility functions; it evaluates test functions through a weighted sum of
suprema, which makes the induced set function sub-additive rather than
additive.  This module provides evaluation, push-forward, pullback, fusion and
an oracle-grade nested conditional composition on dense grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    IncompatibleError,
    UnsupportedFamilyError,
    ValidationError,
)
from .possibility import (
    Box,
    GaussianPossibility,
    GridPossibility,
    IndicatorPossibility,
    MaxMixture,
    PointSet,
    fingerprint,
    product,
    sup_over,
)

COMPATIBILITY_FLOOR = 1e-12
COND_LIMIT = 1e12


class FiniteOuterMeasure:
    """Weighted atoms (w_i, f_i) with positive weights summing to 1."""

    def __init__(self, atoms):
        atoms = [(float(w), f) for w, f in atoms]
        if not atoms:
            raise ValidationError("outer measure needs at least one atom")
        if any(w <= 0.0 for w, _ in atoms):
            raise ValidationError("atom weights must be strictly positive")
        total = sum(w for w, _ in atoms)
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"atom weights must sum to 1, got {total}")
        dims = {f.dim for _, f in atoms}
        if len(dims) != 1:
            raise DimensionMismatchError("atoms live on different spaces")
        self.atoms = atoms
        self.dim = dims.pop()

    @classmethod
    def normalized(cls, atoms):
        """Build from positively weighted atoms, normalizing the weight total."""
        atoms = [(float(w), f) for w, f in atoms if float(w) > 0.0]
        total = sum(w for w, _ in atoms)
        if total <= 0.0:
            raise ValidationError("no positive-weight atoms to normalize")
        return cls([(w / total, f) for w, f in atoms])

    @classmethod
    def dirac(cls, f):
        return cls([(1.0, f)])

    def __len__(self):
        return len(self.atoms)

    def map_atoms(self, fn):
        return FiniteOuterMeasure([(w, fn(f)) for w, f in self.atoms])

    def deduplicated(self, digits=12):
        """Merge atoms with identical fingerprints by summing their weights."""
        seen = {}
        order = []
        for w, f in self.atoms:
            key = fingerprint(f, digits)
            if key in seen:
                i = seen[key]
                order[i] = (order[i][0] + w, order[i][1])
            else:
                seen[key] = len(order)
                order.append((w, f))
        return FiniteOuterMeasure.normalized(order)


# ---------------------------------------------------------------------------
# test functions


@dataclass(frozen=True)
class One:
    """The constant-one test function."""


@dataclass(frozen=True)
class BoxIndicator:
    box: Box


@dataclass(frozen=True)
class GridFunction:
    """A bounded test function given by its values on a finite point list."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", np.atleast_2d(np.asarray(self.points, float)))
        object.__setattr__(self, "values", np.asarray(self.values, float).ravel())
        if self.points.shape[0] != self.values.shape[0]:
            raise ValidationError("grid test function points/values lengths differ")
        if np.any(self.values < 0.0):
            raise ValidationError("test functions must be nonnegative")


def _sup_phi_times_atom(phi, f, grid_res=None):
    if isinstance(phi, One):
        return 1.0
    if isinstance(phi, BoxIndicator):
        return sup_over(f, phi.box, grid_res=grid_res)
    if isinstance(phi, GridFunction):
        if (
            isinstance(f, GridPossibility)
            and f.points.shape == phi.points.shape
            and np.allclose(f.points, phi.points, atol=1e-12)
        ):
            return float(np.max(phi.values * f.values))
        return float(max(v * f(p) for v, p in zip(phi.values, phi.points)))
    raise ValidationError(f"unsupported test function {type(phi).__name__}")


def outer_eval(P, phi, grid_res=None):
    """Evaluate the outer measure: sum_i w_i sup(phi . f_i)."""
    return float(sum(w * _sup_phi_times_atom(phi, f, grid_res) for w, f in P.atoms))


# ---------------------------------------------------------------------------
# measurable maps


@dataclass(frozen=True)
class LinearBijective:
    """x -> A x + b with invertible, well-conditioned A."""

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.matrix, float))
        b = np.asarray(self.offset, float).ravel()
        if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
            raise DimensionMismatchError("linear-bijective map dimensions disagree")
        if np.linalg.cond(A) > COND_LIMIT:
            raise ValidationError("linear-bijective matrix is ill-conditioned")
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "offset", b)

    def apply(self, x):
        return self.matrix @ np.asarray(x, float) + self.offset

    def inverse(self):
        Ainv = np.linalg.inv(self.matrix)
        return LinearBijective(Ainv, -Ainv @ self.offset)

    def is_diagonal(self, tol=1e-12):
        off = self.matrix - np.diag(np.diag(self.matrix))
        return bool(np.all(np.abs(off) <= tol))


@dataclass(frozen=True)
class LinearProjection:
    """Projection onto a subset of coordinates."""

    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))
        if len(set(self.coords)) != len(self.coords) or not self.coords:
            raise ValidationError("projection coordinates must be nonempty and distinct")

    def apply(self, x):
        return np.asarray(x, float)[list(self.coords)]


@dataclass(frozen=True)
class ExplicitFinite:
    """A total map between finite point lists, given as an index table."""

    source_points: np.ndarray
    target_points: np.ndarray
    table: np.ndarray  # table[i] = target index of source point i

    def __post_init__(self):
        src = np.atleast_2d(np.asarray(self.source_points, float))
        tgt = np.atleast_2d(np.asarray(self.target_points, float))
        tab = np.asarray(self.table, int).ravel()
        if tab.shape[0] != src.shape[0]:
            raise ValidationError("explicit-finite table is not total on its domain")
        if tab.size and (tab.min() < 0 or tab.max() >= tgt.shape[0]):
            raise ValidationError("explicit-finite table indexes outside the target")
        object.__setattr__(self, "source_points", src)
        object.__setattr__(self, "target_points", tgt)
        object.__setattr__(self, "table", tab)


def projection_table(pair_points, marginal_points, coords):
    """ExplicitFinite form of a coordinate projection between finite carriers."""
    pair_points = np.atleast_2d(np.asarray(pair_points, float))
    marginal_points = np.atleast_2d(np.asarray(marginal_points, float))
    cols = list(coords)
    table = []
    for p in pair_points:
        img = p[cols]
        hits = np.where(np.all(np.abs(marginal_points - img) <= 1e-12, axis=1))[0]
        if hits.size == 0:
            raise ValidationError("projected point missing from the marginal carrier")
        table.append(int(hits[0]))
    return ExplicitFinite(pair_points, marginal_points, np.array(table))


# ---------------------------------------------------------------------------
# push-forward


def _push_atom(f, xi):
    if isinstance(xi, LinearBijective):
        A, b = xi.matrix, xi.offset
        if isinstance(f, GaussianPossibility):
            return GaussianPossibility(A @ f.mean + b, A @ f.spread @ A.T)
        if isinstance(f, GridPossibility):
            return GridPossibility(f.points @ A.T + b, f.values)
        if isinstance(f, IndicatorPossibility):
            if isinstance(f.support, PointSet):
                return IndicatorPossibility(PointSet(f.support.points @ A.T + b))
            if xi.is_diagonal():
                a = np.diag(A)
                lo = np.where(a >= 0, a * f.support.lo, a * f.support.hi) + b
                hi = np.where(a >= 0, a * f.support.hi, a * f.support.lo) + b
                return IndicatorPossibility(Box(lo, hi))
            raise UnsupportedFamilyError(
                "box indicator push-forward needs a diagonal linear map"
            )
        if isinstance(f, MaxMixture):
            return MaxMixture([(w, _push_atom(g, xi)) for w, g in f.components])
    if isinstance(xi, LinearProjection):
        cols = list(xi.coords)
        if isinstance(f, GaussianPossibility):
            # the sup-marginal of a Gaussian possibility keeps the spread sub-block
            return GaussianPossibility(f.mean[cols], f.spread[np.ix_(cols, cols)])
        if isinstance(f, GridPossibility):
            return _grid_projection(f, cols)
        if isinstance(f, IndicatorPossibility):
            if isinstance(f.support, Box):
                return IndicatorPossibility(Box(f.support.lo[cols], f.support.hi[cols]))
            return IndicatorPossibility(PointSet(f.support.points[:, cols]))
        if isinstance(f, MaxMixture):
            return MaxMixture([(w, _push_atom(g, xi)) for w, g in f.components])
    if isinstance(xi, ExplicitFinite):
        if isinstance(f, GridPossibility):
            if f.points.shape[0] != xi.table.shape[0]:
                raise DimensionMismatchError("grid atom does not match the map domain")
            out = np.zeros(xi.target_points.shape[0])
            np.maximum.at(out, xi.table, f.values)
            return GridPossibility(xi.target_points, out)
        if isinstance(f, IndicatorPossibility) and isinstance(f.support, PointSet):
            mask = np.array([f.support.contains(p) for p in xi.source_points])
            img = np.unique(xi.table[mask])
            if img.size == 0:
                raise ValidationError("indicator support misses the map domain")
            return IndicatorPossibility(PointSet(xi.target_points[img]))
    raise UnsupportedFamilyError(
        f"push-forward of {f.family()} by {type(xi).__name__} is not supported"
    )


def _grid_projection(f, cols):
    """Marginalize a grid possibility by supremum over the dropped coordinates."""
    proj = f.points[:, cols]
    uniq, inverse = np.unique(np.round(proj, 12), axis=0, return_inverse=True)
    out = np.zeros(uniq.shape[0])
    np.maximum.at(out, inverse, f.values)
    return GridPossibility(uniq, out)


def pushforward(P, xi):
    """Image outer measure: each atom f becomes x -> sup over the fiber of f."""
    return P.map_atoms(lambda f: _push_atom(f, xi))


# ---------------------------------------------------------------------------
# pullback


def _pull_atom(f, xi):
    if isinstance(xi, LinearBijective):
        # f o xi is the push-forward of f by the inverse map
        return _push_atom(f, xi.inverse())
    if isinstance(xi, ExplicitFinite):
        if isinstance(f, GridPossibility):
            if f.points.shape[0] != xi.target_points.shape[0] or not np.allclose(
                f.points, xi.target_points, atol=1e-12
            ):
                raise DimensionMismatchError("grid atom does not match the map target")
            # f o xi can have sup < 1 when the map misses the maximizer of f;
            # keep the raw values so the pullback duality identity stays exact.
            return GridPossibility(xi.source_points, f.values[xi.table], normalized=False)
        if isinstance(f, IndicatorPossibility):
            mask = np.array(
                [f(xi.target_points[j]) > 0.0 for j in xi.table], dtype=bool
            )
            if not mask.any():
                raise ValidationError("pullback indicator has empty support")
            return IndicatorPossibility(PointSet(xi.source_points[mask]))
    raise UnsupportedFamilyError(
        f"pullback of {f.family()} by {type(xi).__name__} is not representable"
    )


def pullback(P, xi):
    """Pre-composition outer measure: each atom f becomes f o xi."""
    return P.map_atoms(lambda f: _pull_atom(f, xi))


# ---------------------------------------------------------------------------
# fusion


def fuse(P, Pp, grid_res=None):
    """Combine two strongly independent sources; returns (posterior, compatibility).

    Atoms are all rescaled cross products with weights proportional to
    w_i v_l ||f_i . f'_l||; the compatibility is the pre-normalization weight
    total.  Raises IncompatibleError when that total is (numerically) zero.
    """
    if P.dim != Pp.dim:
        raise DimensionMismatchError("fusing outer measures on different spaces")
    raw = []
    for w, f in P.atoms:
        for v, g in Pp.atoms:
            sf = product(f, g, grid_res=grid_res)
            if sf.scale > 0.0:
                raw.append((w * v * sf.scale, sf.base))
    compatibility = sum(w for w, _ in raw)
    if compatibility <= COMPATIBILITY_FLOOR:
        raise IncompatibleError(
            "the two sources cannot describe the same system (compatibility ~ 0)"
        )
    fused = FiniteOuterMeasure.normalized(raw).deduplicated()
    return fused, float(compatibility)


# ---------------------------------------------------------------------------
# nested conditional composition (oracle-grade, dense grids)


def _check_dense(arrays):
    for a in arrays:
        if not isinstance(a, np.ndarray):
            raise ValidationError("conditional composition requires dense grid arrays")


def compose_forward(prior, kernels, phi):
    """Nested composition conditioned on the past.

    ``prior`` is a list of (weight, values-on-X0); ``kernels[t-1]`` is a list
    of (weight, dense array over X0 x ... x Xt) giving conditional possibility
    values in the last axis; ``phi`` is a dense test function on the product
    space.  Evaluates right-to-left in time.
    """
    phi = np.asarray(phi, float)
    _check_dense([np.asarray(f) for _, f in prior])
    psi = phi
    for t in range(len(kernels), 0, -1):
        acc = 0.0
        for v, g in kernels[t - 1]:
            g = np.asarray(g, float)
            if g.shape != psi.shape:
                raise ValidationError("kernel shape does not match the remaining axes")
            acc = acc + v * np.max(g * psi, axis=-1)
        psi = acc
    value = 0.0
    for w, f in prior:
        value += w * float(np.max(np.asarray(f, float) * psi))
    return float(value)


def compose_backward(final, kernels, phi):
    """Nested composition conditioned on the future.

    ``final`` is a list of (weight, values-on-XT); ``kernels[t]`` (for
    t = 0..T-1) is a list of (weight, dense array over Xt x ... x XT) giving
    conditional possibility values in the first axis.
    """
    phi = np.asarray(phi, float)
    psi = phi
    for t in range(len(kernels)):
        acc = 0.0
        for v, g in kernels[t]:
            g = np.asarray(g, float)
            if g.shape != psi.shape:
                raise ValidationError("kernel shape does not match the remaining axes")
            acc = acc + v * np.max(g * psi, axis=0)
        psi = acc
    value = 0.0
    for w, f in final:
        value += w * float(np.max(np.asarray(f, float) * psi))
    return float(value)


# canonical name for the past-conditioned nesting
compose_conditional = compose_forward
