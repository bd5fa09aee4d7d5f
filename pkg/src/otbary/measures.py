"""Discrete probability measures on R^d: construction, canonicalization,
line projections, and seeded Gaussian sampling.

A measure is a weighted point cloud.  Weights live exactly on the probability
simplex after construction; atoms are merged/dropped only through
:func:`canonicalize`, never silently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ATOM_TOL",
    "DiscreteMeasure",
    "GaussianSpec",
    "new_discrete",
    "canonicalize",
    "project",
    "sample_gaussian",
    "radius",
    "measure_to_dict",
    "measure_from_dict",
    "load_measure",
    "save_measure",
]

# Default merge tolerance for near-duplicate atoms (absolute Euclidean
# distance).  Floating-point projections create near-ties, so exact equality
# is not enough.
ATOM_TOL = 1e-9

_NEG_WEIGHT_TOL = -1e-15
_MASS_TOL = 1e-9


class DiscreteMeasure:
    """Immutable weighted point cloud.

    Attributes
    ----------
    points : ndarray, shape (m, d)
        Atom locations, one per row.
    weights : ndarray, shape (m,)
        Nonnegative weights summing to 1.
    """

    __slots__ = ("points", "weights")

    def __init__(self, points: np.ndarray, weights: np.ndarray):
        points = np.array(points, dtype=np.float64, order="C")
        weights = np.array(weights, dtype=np.float64, order="C")
        if points.ndim != 2:
            raise ValueError("points must be a 2-D array of shape (m, d)")
        if weights.ndim != 1 or weights.shape[0] != points.shape[0]:
            raise ValueError(
                f"got {points.shape[0]} points but {weights.shape[0]} weights"
            )
        if points.shape[0] < 1:
            raise ValueError("a measure needs at least one atom")
        if not np.all(np.isfinite(points)):
            raise ValueError("points contain non-finite entries")
        if not np.all(np.isfinite(weights)):
            raise ValueError("weights contain non-finite entries")
        points.setflags(write=False)
        weights.setflags(write=False)
        self.points = points
        self.weights = weights

    @property
    def num_atoms(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __repr__(self) -> str:
        return f"DiscreteMeasure(m={self.num_atoms}, d={self.dim})"


def new_discrete(points, weights) -> DiscreteMeasure:
    """Build a validated measure from raw points and weights.

    Weights may dip to -1e-15 below zero (clamped); their sum must be within
    1e-9 of one and is renormalized exactly once here.

    Raises
    ------
    ValueError
        On ragged/mismatched points, a genuinely negative weight, or total
        mass outside tolerance.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError("weights must be a 1-D vector")
    if w.shape[0] != pts.shape[0]:
        raise ValueError(f"got {pts.shape[0]} points but {w.shape[0]} weights")
    if np.any(w < _NEG_WEIGHT_TOL):
        raise ValueError(f"negative weight below tolerance: min={w.min()}")
    w = np.maximum(w, 0.0)
    total = w.sum()
    if total <= 0.0:
        raise ValueError("zero total mass")
    if abs(total - 1.0) > _MASS_TOL:
        raise ValueError(f"total mass {total} outside tolerance of 1")
    return DiscreteMeasure(pts, w / total)


def uniform(points) -> DiscreteMeasure:
    """Empirical measure: equal weight on each row of `points`."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    return DiscreteMeasure(pts, np.full(n, 1.0 / n))


def dirac(point) -> DiscreteMeasure:
    """Point mass at a single location."""
    return new_discrete([np.atleast_1d(np.asarray(point, dtype=np.float64))], [1.0])


def canonicalize(m: DiscreteMeasure, atom_tol: float = ATOM_TOL) -> DiscreteMeasure:
    """Merge atoms within `atom_tol` of each other and drop zero weights.

    The result has pairwise-distinct atoms (separation > atom_tol) and
    strictly positive weights, and represents the same measure (merged groups
    collapse to their weighted mean, which for exact duplicates is the atom
    itself).  Idempotent: merging repeats until the separation condition
    holds, so a second call is a no-op.
    """
    pts = m.points
    w = m.weights
    keep = w > 0.0
    if not np.all(keep):
        if not np.any(keep):
            raise ValueError("measure has no positive-weight atom")
        pts = pts[keep]
        w = w[keep]
    while True:
        pts, w, merged = _merge_pass(pts, w, atom_tol)
        if not merged:
            break
    w = w / w.sum()
    return DiscreteMeasure(pts, w)


def _merge_pass(pts: np.ndarray, w: np.ndarray, atom_tol: float):
    """One grouping pass: union close atoms, return (points, weights, merged?)."""
    m = pts.shape[0]
    if m == 1:
        return pts, w, False
    order = np.lexsort(pts.T[::-1])
    pts = pts[order]
    w = w[order]
    # Union-find over pairs within atom_tol; sorted first coordinate limits
    # the candidate window.
    parent = np.arange(m)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    first = pts[:, 0]
    merged = False
    for i in range(m - 1):
        j = i + 1
        while j < m and first[j] - first[i] <= atom_tol:
            if np.linalg.norm(pts[i] - pts[j]) <= atom_tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
                    merged = True
            j += 1
    if not merged:
        return pts, w, False
    roots = np.array([find(i) for i in range(m)])
    uniq, inverse = np.unique(roots, return_inverse=True)
    new_w = np.zeros(uniq.shape[0])
    np.add.at(new_w, inverse, w)
    new_pts = np.zeros((uniq.shape[0], pts.shape[1]))
    np.add.at(new_pts, inverse, pts * w[:, None])
    new_pts /= new_w[:, None]
    return new_pts, new_w, True


def project(m: DiscreteMeasure, theta) -> DiscreteMeasure:
    """Push the measure forward onto the line directed by unit vector `theta`.

    Atoms that land on (nearly) the same point are merged, so the result is
    always canonical.
    """
    theta = np.asarray(theta, dtype=np.float64)
    nrm = np.linalg.norm(theta)
    if abs(nrm - 1.0) > 1e-12:
        raise ValueError(f"direction must be a unit vector, got norm {nrm}")
    if theta.shape[0] != m.dim:
        raise ValueError("direction dimension does not match measure")
    coords = m.points @ theta
    return canonicalize(DiscreteMeasure(coords[:, None], m.weights))


@dataclass(frozen=True)
class GaussianSpec:
    """Mean and SPD covariance of a d-dimensional Gaussian."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        cov = np.asarray(self.covariance, dtype=np.float64)
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise ValueError("covariance shape does not match mean dimension")
        if np.max(np.abs(cov - cov.T)) > 1e-12:
            raise ValueError("covariance is not symmetric within 1e-12")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance is not positive-definite") from exc
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "_chol", chol)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def sample_gaussian(spec: GaussianSpec, n: int, seed: int) -> np.ndarray:
    """Draw n points from the Gaussian, bit-reproducible for a given seed.

    Uses the counter-based Philox generator so replications seeded
    independently stay reproducible regardless of scheduling.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    z = rng.standard_normal((n, spec.dim))
    return spec.mean[None, :] + z @ spec._chol.T


def radius(m: DiscreteMeasure) -> float:
    """Largest Euclidean norm over the atoms (radius of the enclosing ball)."""
    return float(np.sqrt(np.max(np.einsum("ij,ij->i", m.points, m.points))))


def measure_to_dict(m: DiscreteMeasure) -> dict:
    return {"points": m.points.tolist(), "weights": m.weights.tolist()}


def measure_from_dict(obj: dict) -> DiscreteMeasure:
    if not isinstance(obj, dict) or "points" not in obj or "weights" not in obj:
        raise ValueError('measure JSON must have "points" and "weights"')
    return new_discrete(obj["points"], obj["weights"])


def save_measure(m: DiscreteMeasure, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(measure_to_dict(m), fh)


def load_measure(path) -> DiscreteMeasure:
    with open(path, "r", encoding="utf-8") as fh:
        return measure_from_dict(json.load(fh))
