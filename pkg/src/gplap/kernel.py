"""Kernel profiles and the derived constants used by the graph operators.

The profile Phi is >= 1 on (0,1), vanishes for s >= 2, and (for the admissible
kinds) is smooth enough that s*Phi(s) has a unique quadratic maximum in (0,2):
s*Phi(s) + theta*(s-s0)^2 <= s0*Phi(s0) on [0,2] for some theta > 0. The
constants

    C1 = integral of Phi(|z|) over the radius-2 ball,
    C2 = (1/2) integral of Phi(|z|) z_1^2,
    lambda = C2 / (s0^2 Phi(s0) C1)

calibrate the game-theoretic operator so that it matches the weighted
p-Laplacian in the continuum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy import integrate

from .errors import AdmissibilityError, InvalidArgumentError

__all__ = [
    "KernelProfile",
    "KernelConstants",
    "profile_eval",
    "compute_constants",
    "verify_admissibility",
    "AdmissibilityReport",
]

# smoothstep polynomials on [0,1]: value 0 at 0, 1 at 1
_QUINTIC = np.array([0.0, 0.0, 0.0, 10.0, -15.0, 6.0])  # 10 t^3 - 15 t^4 + 6 t^5
_CUBIC = np.array([0.0, 0.0, 3.0, -2.0])  # 3 t^2 - 2 t^3

PROFILE_CODES = {"plateau-quintic": 0, "plateau-cubic": 1, "indicator": 2}


def _taper_coeffs(step):
    # coefficients (ascending powers of s) of step(2 - s) for the taper s in [1,2]
    comp = np.polynomial.Polynomial([2.0, -1.0])
    p = np.polynomial.Polynomial(step)
    return (p(comp)).coef


_TAPER = {
    0: _taper_coeffs(_QUINTIC),
    1: np.concatenate([_taper_coeffs(_CUBIC), [0.0, 0.0]]),  # pad to degree 5
}


@dataclass(frozen=True)
class KernelProfile:
    """Radial weight profile. "indicator" is demo-only and non-admissible."""

    kind: str

    def __post_init__(self):
        if self.kind not in PROFILE_CODES:
            raise InvalidArgumentError(f"unknown profile kind {self.kind!r}")

    @property
    def code(self):
        return PROFILE_CODES[self.kind]

    @property
    def admissible_kind(self):
        return self.kind != "indicator"

    def __call__(self, s):
        s = np.asarray(s, dtype=np.float64)
        if np.any(s < 0):
            raise InvalidArgumentError("profile argument must be >= 0")
        if self.kind == "indicator":
            return np.where(s < 2.0, 1.0, 0.0)
        out = np.ones_like(s)
        taper = (s > 1.0) & (s < 2.0)
        t = 2.0 - s[taper]
        if self.kind == "plateau-quintic":
            out[taper] = t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
        else:
            out[taper] = t * t * (3.0 - 2.0 * t)
        out[s >= 2.0] = 0.0
        return out

    def max_value(self):
        """m = max Phi over [0,2] (1 for every built-in kind)."""
        return 1.0

    def taper_coeffs(self):
        """Ascending coefficients of Phi on the taper [1,2] as a degree-5
        polynomial in s (zeros beyond the actual degree)."""
        if self.kind == "indicator":
            raise InvalidArgumentError("indicator has no polynomial taper")
        return _TAPER[self.code].copy()


def profile_eval(profile: KernelProfile, s):
    """Phi(s); exact analytic evaluation, 0 for s >= 2."""
    return profile(s)


@dataclass(frozen=True)
class AdmissibilityReport:
    c2_ok: bool
    support_ok: bool
    lower_bound_ok: bool
    uniquemax_ok: bool
    theta: float

    @property
    def admissible(self):
        return self.c2_ok and self.support_ok and self.lower_bound_ok and self.uniquemax_ok


def _grid_s0_theta(profile, grid_n=10_000):
    """Grid argmax of s*Phi(s) on [0,2] and the largest grid-feasible theta."""
    s = np.linspace(0.0, 2.0, grid_n)
    g = s * profile(s)
    i0 = int(np.argmax(g))
    s0, g0 = s[i0], g[i0]
    mask = np.abs(s - s0) > 1e-9
    theta = float(np.min((g0 - g[mask]) / (s[mask] - s0) ** 2))
    return float(s0), float(g0), theta


def verify_admissibility(profile: KernelProfile, grid_n=10_000):
    """Grid + analytic checks of the profile requirements; pure data out."""
    s = np.linspace(0.0, 2.0, grid_n)
    vals = profile(s)

    support_ok = bool(np.all(profile(np.linspace(2.0, 4.0, 100)) == 0.0))
    interior = (s > 0.0) & (s < 1.0)
    lower_bound_ok = bool(np.all(vals[interior] >= 1.0 - 1e-12))

    # second divided differences must converge near every point (detects jumps
    # in Phi or Phi'); probing across the breakpoints s=1 and s=2 suffices
    c2_ok = True
    for sc in np.concatenate([np.linspace(0.05, 1.95, 39), [1.0, 2.0]]):
        prev = None
        for eps in (1e-3, 1e-4, 1e-5):
            lo = max(sc - eps, 0.0)
            dd = (profile(lo) - 2.0 * profile(sc) + profile(sc + eps)) / eps**2
            if prev is not None and abs(dd - prev) > 50.0:
                c2_ok = False
            prev = dd
        if not c2_ok:
            break

    s0, g0, theta = _grid_s0_theta(profile, grid_n)
    uniquemax_ok = bool(theta > 1e-12 and 0.0 < s0 < 2.0 and g0 > 0.0)
    return AdmissibilityReport(
        c2_ok=c2_ok,
        support_ok=support_ok,
        lower_bound_ok=lower_bound_ok,
        uniquemax_ok=uniquemax_ok,
        theta=max(theta, 0.0),
    )


@dataclass(frozen=True)
class KernelConstants:
    c1: float
    c2: float
    s0: float
    phi_s0: float
    theta: float
    lam: float
    d: int

    def as_dict(self):
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        return {"C1": out["c1"], "C2": out["c2"], "s0": out["s0"],
                "phi_s0": out["phi_s0"], "theta": out["theta"],
                "lambda": out["lambda"], "d": out["d"]}


def _sphere_area(d):
    # surface area of the unit sphere S^{d-1}
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _radial_integral(profile, power):
    # integral of Phi(s) s^power over [0,2], split at the plateau/taper joint
    f = lambda s: float(profile(np.float64(s))) * s**power
    a, ea = integrate.quad(f, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    b, eb = integrate.quad(f, 1.0, 2.0, epsabs=1e-14, epsrel=1e-13)
    return a + b


def _golden_refine(fun, lo, hi, tol=1e-12):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d_ = a + invphi * (b - a)
    fc, fd = fun(c), fun(d_)
    while b - a > tol:
        if fc > fd:
            b, d_, fd = d_, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d_, fd
            d_ = a + invphi * (b - a)
            fd = fun(d_)
    return 0.5 * (a + b)


def compute_constants(profile: KernelProfile, d, allow_inadmissible=False):
    """C1, C2 by adaptive quadrature; s0 by grid + golden-section refinement;
    theta as the largest grid-feasible quadratic-gap constant.

    Raises AdmissibilityError for non-admissible profiles unless explicitly
    overridden (demo-only indicator mode).
    """
    if d < 1:
        raise InvalidArgumentError("d must be >= 1")
    report = verify_admissibility(profile)
    if not report.admissible and not allow_inadmissible:
        raise AdmissibilityError(
            f"profile {profile.kind!r} is not admissible: {report}"
        )

    omega = _sphere_area(d)
    c1 = omega * _radial_integral(profile, d - 1)
    c2 = omega / (2.0 * d) * _radial_integral(profile, d + 1)

    s0g, g0, theta = _grid_s0_theta(profile, grid_n=100_001)
    if profile.kind == "indicator":
        # s*Phi has no interior max; closed-support convention puts s0 at 2
        s0 = 2.0
        phi_s0 = 1.0
    else:
        width = 2.0 / 100_000
        g = lambda s: float(s * profile(np.float64(s)))
        s0 = _golden_refine(g, max(s0g - 2 * width, 0.0), min(s0g + 2 * width, 2.0))
        phi_s0 = float(profile(np.float64(s0)))
        # quadratic-gap constant against the refined s0; slight shrink keeps
        # the Eq.-type grid inequality valid on any verification grid
        s = np.linspace(0.0, 2.0, 1_000_001)
        gs = s * profile(s)
        mask = np.abs(s - s0) > 1e-7
        theta = 0.995 * float(np.min((s0 * phi_s0 - gs[mask]) / (s[mask] - s0) ** 2))
        if theta <= 1e-12:
            raise AdmissibilityError("no feasible theta > 1e-12 for the quadratic gap")
    lam = c2 / (s0 * s0 * phi_s0 * c1)
    return KernelConstants(c1=c1, c2=c2, s0=s0, phi_s0=phi_s0,
                           theta=max(theta, 0.0), lam=lam, d=int(d))
