"""Flat-torus geometry, density families, and seeded sampling of vertex clouds.

Points live in the unit cube [0,1)^d with opposite faces identified. All
coordinates are float64 and canonical (wrapped into [0,1)), which keeps
hashing and file round-trips deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, SamplingFailureError

__all__ = [
    "wrap",
    "torus_displacement",
    "torus_distance",
    "Density",
    "density_eval",
    "PointCloud",
    "sample_cloud",
]


def wrap(x):
    """Canonicalize coordinates into [0,1) by dropping the integer part."""
    x = np.asarray(x, dtype=np.float64)
    out = x - np.floor(x)
    # floor(x) can round such that x - floor(x) == 1.0 for x just below an integer
    out[out >= 1.0] = 0.0
    return out


def _check_dims(a, b):
    if a.shape[-1] != b.shape[-1]:
        raise InvalidArgumentError(
            f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}"
        )


def torus_displacement(a, b):
    """Shortest signed displacement b - a on the torus, in [-1/2, 1/2)^d.

    Broadcasts over leading axes.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_dims(a, b)
    d = b - a
    return d - np.round(d)


def torus_distance(a, b):
    """Euclidean length of the coordinate-wise wrapped difference.

    Symmetric, satisfies the triangle inequality, bounded by sqrt(d)/2.
    """
    disp = torus_displacement(a, b)
    return np.sqrt(np.sum(disp * disp, axis=-1))


# ---------------------------------------------------------------------------
# density families


def _std_normal_cdf(z):
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


@dataclass(frozen=True)
class Density:
    """Probability density on the torus from a small analytic family.

    kind is one of "uniform", "cosine-mixture", "periodic-bump". Each family
    has closed-form positivity and sup bounds, and integrates to 1 exactly
    (checked by grid quadrature at construction).
    """

    kind: str
    d: int
    amplitude: float = 0.0
    freq: tuple = ()
    center: tuple = ()
    sigma: float = 0.0
    norm_const: float = 1.0
    sup_bound: float = 1.0
    _images: int = field(default=3, repr=False)

    # -- constructors -------------------------------------------------------

    @staticmethod
    def uniform(d):
        if d < 1:
            raise InvalidArgumentError("d must be >= 1")
        return Density(kind="uniform", d=d, sup_bound=1.0)

    @staticmethod
    def cosine_mixture(d, amplitude=0.5, freq=None):
        """f(x) = 1 + a * prod_i cos(2 pi k_i x_i); needs |a| < 1 so f > 0."""
        if d < 1:
            raise InvalidArgumentError("d must be >= 1")
        if not abs(amplitude) < 1.0:
            raise InvalidArgumentError("cosine-mixture needs |amplitude| < 1 for positivity")
        if freq is None:
            freq = (1,) * d
        freq = tuple(int(k) for k in freq)
        if len(freq) != d or any(k < 1 for k in freq):
            raise InvalidArgumentError("freq must give one positive integer per axis")
        f = Density(
            kind="cosine-mixture", d=d, amplitude=float(amplitude), freq=freq,
            sup_bound=1.0 + abs(amplitude),
        )
        f._validate()
        return f

    @staticmethod
    def periodic_bump(d, center=None, sigma=0.15, amplitude=1.0):
        """1 + a * (periodicized Gaussian at `center`), normalized; truncated
        at 3 images per axis. amplitude >= 0 keeps f > 0 unconditionally."""
        if d < 1:
            raise InvalidArgumentError("d must be >= 1")
        if sigma <= 0:
            raise InvalidArgumentError("sigma must be > 0")
        if amplitude < 0:
            raise InvalidArgumentError("periodic-bump amplitude must be >= 0")
        if center is None:
            center = (0.5,) * d
        center = tuple(float(c) for c in wrap(np.asarray(center, dtype=np.float64)))
        if len(center) != d:
            raise InvalidArgumentError("center must have d coordinates")
        # mass of the truncated periodized Gaussian factorizes per axis
        mass = 1.0
        peak = 1.0
        for ci in center:
            mi = 0.0
            pi_ = 0.0
            for m in range(-3, 4):
                lo = (0.0 - ci + m) / sigma
                hi = (1.0 - ci + m) / sigma
                mi += sigma * math.sqrt(2.0 * math.pi) * (
                    _std_normal_cdf(hi) - _std_normal_cdf(lo)
                )
                pi_ += math.exp(-0.5 * m * m / (sigma * sigma))
            mass *= mi
            peak *= pi_
        z = 1.0 + amplitude * mass
        f = Density(
            kind="periodic-bump", d=d, amplitude=float(amplitude), center=center,
            sigma=float(sigma), norm_const=z,
            sup_bound=(1.0 + amplitude * peak) / z * (1.0 + 1e-12),
        )
        f._validate()
        return f

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x):
        """Evaluate f at canonicalized points; shape (..., d) -> (...)."""
        x = wrap(np.asarray(x, dtype=np.float64))
        if x.shape[-1] != self.d:
            raise InvalidArgumentError(f"points have dimension {x.shape[-1]}, density has {self.d}")
        if self.kind == "uniform":
            return np.ones(x.shape[:-1], dtype=np.float64)
        if self.kind == "cosine-mixture":
            prod = np.ones(x.shape[:-1], dtype=np.float64)
            for i, k in enumerate(self.freq):
                prod *= np.cos(2.0 * np.pi * k * x[..., i])
            return 1.0 + self.amplitude * prod
        if self.kind == "periodic-bump":
            return (1.0 + self.amplitude * self._bump(x)) / self.norm_const
        raise InvalidArgumentError(f"unknown density kind {self.kind!r}")

    def grad(self, x):
        """Analytic gradient, shape (..., d)."""
        x = wrap(np.asarray(x, dtype=np.float64))
        if self.kind == "uniform":
            return np.zeros_like(x)
        if self.kind == "cosine-mixture":
            cos = np.stack(
                [np.cos(2.0 * np.pi * k * x[..., i]) for i, k in enumerate(self.freq)], axis=-1
            )
            sin = np.stack(
                [np.sin(2.0 * np.pi * k * x[..., i]) for i, k in enumerate(self.freq)], axis=-1
            )
            g = np.empty_like(x)
            for i, k in enumerate(self.freq):
                others = np.prod(np.delete(cos, i, axis=-1), axis=-1)
                g[..., i] = -self.amplitude * 2.0 * np.pi * k * sin[..., i] * others
            return g
        if self.kind == "periodic-bump":
            g = np.zeros_like(x)
            s2 = self.sigma * self.sigma
            per_axis_vals, per_axis_ders = self._bump_factors(x)
            for i in range(self.d):
                others = np.ones(x.shape[:-1])
                for j in range(self.d):
                    if j != i:
                        others = others * per_axis_vals[j]
                g[..., i] = self.amplitude * per_axis_ders[i] * others / self.norm_const
            del s2
            return g
        raise InvalidArgumentError(f"unknown density kind {self.kind!r}")

    def _bump_factors(self, x):
        s2 = self.sigma * self.sigma
        vals, ders = [], []
        for i in range(self.d):
            t = x[..., i] - self.center[i]
            v = np.zeros(x.shape[:-1])
            dv = np.zeros(x.shape[:-1])
            for m in range(-3, 4):
                e = np.exp(-0.5 * (t + m) ** 2 / s2)
                v += e
                dv += -(t + m) / s2 * e
            vals.append(v)
            ders.append(dv)
        return vals, ders

    def _bump(self, x):
        vals, _ = self._bump_factors(x)
        out = np.ones(x.shape[:-1])
        for v in vals:
            out = out * v
        return out

    # -- validation ---------------------------------------------------------

    def _validate(self, grid_per_axis=64, tol=1e-6):
        # normalization by periodic trapezoid rule (spectrally accurate here)
        # and sup bound against the same grid
        if self.d > 3:
            grid_per_axis = 16
        axes = [np.arange(grid_per_axis) / grid_per_axis] * self.d
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.d)
        vals = self(mesh)
        if np.any(vals <= 0):
            raise InvalidArgumentError("density not strictly positive on validation grid")
        integral = float(np.mean(vals))
        if abs(integral - 1.0) > tol:
            raise InvalidArgumentError(
                f"density does not integrate to 1 (grid quadrature gives {integral:.8f})"
            )
        if float(vals.max()) > self.sup_bound * (1.0 + 1e-9):
            raise InvalidArgumentError("sup_bound below grid maximum of f")


def density_eval(f: Density, x):
    """Evaluate the density at x (canonicalized first). Periodic by design."""
    return f(x)


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class PointCloud:
    """n i.i.d. samples of a density on the torus; labels are kept separate
    and appended at graph build."""

    points: np.ndarray
    seed: int

    @property
    def n_unlabeled(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]


def sample_cloud(n, f: Density, seed):
    """Rejection-sample n points with law f; deterministic for fixed seed.

    Raises SamplingFailureError if the proposal budget 1000*n*sup_bound is
    exhausted (which signals a bad sup bound).
    """
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    rng = np.random.default_rng(seed)
    budget = int(1000.0 * n * f.sup_bound)
    out = np.empty((n, f.d), dtype=np.float64)
    got = 0
    used = 0
    while got < n:
        batch = min(max(n - got, 1024) * 2, budget - used)
        if batch <= 0:
            raise SamplingFailureError(
                f"rejection sampling exhausted {budget} proposals ({got}/{n} accepted)"
            )
        props = rng.random((batch, f.d))
        accept_u = rng.random(batch)
        used += batch
        if f.kind == "uniform":
            keep = props
        else:
            keep = props[accept_u * f.sup_bound < f(props)]
        take = min(n - got, keep.shape[0])
        out[got : got + take] = keep[:take]
        got += take
    return PointCloud(points=out, seed=int(seed))
