"""Closed-form transport models: template, warp and inverse warp.

Three PDE families admit an exact factorization of the sensor signal as
s(t) = g'(t) * template(g(t)) with a strictly increasing warp g:

* pure transport (wave):       g(t) = t - x_m / nu
* diffusion:                   g(t) = D t / x_m^2
* convection-diffusion:        g(t) = (x_m - nu t)^2 / (4 D t),  t > x_m/nu

The convection-diffusion inverse warp is the increasing root of a
quadratic; first-order expansions of it around a center parameter give
exactly affine (hence convex) families in D or nu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonPositiveShift, OutOfSupport
from .transform import CdtRepr, WarpMap


def _as_grid(t) -> np.ndarray:
    return np.atleast_1d(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class WaveModel:
    """Nondispersive transport at speed nu measured at x = x_m."""

    nu: float
    x_m: float

    def __post_init__(self):
        if not (self.nu > 0 and self.x_m > 0):
            raise ValueError("nu and x_m must be positive")

    @property
    def delay(self) -> float:
        return self.x_m / self.nu

    def warp(self, t: np.ndarray) -> WarpMap:
        t = _as_grid(t)
        return WarpMap(t, t - self.delay, np.ones(t.shape))

    def inverse_warp(self, z) -> np.ndarray:
        return _as_grid(z) + self.delay

    def sensor(self, template, t: np.ndarray) -> np.ndarray:
        """template evaluated at t - x_m/nu; template is a callable."""
        return template(_as_grid(t) - self.delay)


@dataclass(frozen=True)
class DiffusionModel:
    """Pure diffusion with coefficient D measured at x = x_m."""

    D: float
    x_m: float

    def __post_init__(self):
        if not (self.D > 0 and self.x_m > 0):
            raise ValueError("D and x_m must be positive")

    def sensor(self, t) -> np.ndarray:
        t = _as_grid(t)
        if np.any(t <= 0):
            raise OutOfSupport("diffusion sensor signal needs t > 0")
        return np.exp(-self.x_m**2 / (4 * self.D * t)) / np.sqrt(4 * np.pi * self.D * t)

    def template(self, t) -> np.ndarray:
        t = _as_grid(t)
        if np.any(t <= 0):
            raise OutOfSupport("diffusion template needs t > 0")
        return self.x_m / (self.D * np.sqrt(4 * np.pi * t)) * np.exp(-1.0 / (4 * t))

    def warp(self, t: np.ndarray) -> WarpMap:
        t = _as_grid(t)
        rate = self.D / self.x_m**2
        return WarpMap(t, rate * t, np.full(t.shape, rate))

    def inverse_warp(self, z) -> np.ndarray:
        return self.x_m**2 * _as_grid(z) / self.D


@dataclass(frozen=True)
class ConvDiffModel:
    """Convection-diffusion with speed nu and diffusivity D at x = x_m.

    The warp is increasing only for t > x_m/nu, so the model carries a
    support [t0, t1] with t0 = x_m/nu + a, a > 0 (default 0.05 x_m/nu).
    """

    nu: float
    D: float
    x_m: float
    t0: float = None
    t1: float = None

    def __post_init__(self):
        if not (self.nu > 0 and self.D > 0 and self.x_m > 0):
            raise ValueError("nu, D and x_m must be positive")
        arrival = self.x_m / self.nu
        t0 = self.t0 if self.t0 is not None else 1.05 * arrival
        t1 = self.t1 if self.t1 is not None else 2.0 * arrival
        if not (t0 > arrival):
            raise ValueError("support must start strictly after x_m/nu")
        if not (t1 > t0):
            raise ValueError("support must be a nonempty interval")
        object.__setattr__(self, "t0", float(t0))
        object.__setattr__(self, "t1", float(t1))

    def _check_support(self, t: np.ndarray) -> None:
        if np.any(t < self.t0 - 1e-12) or np.any(t > self.t1 + 1e-12):
            raise OutOfSupport(
                f"t outside declared support [{self.t0:g}, {self.t1:g}]"
            )

    def sensor(self, t) -> np.ndarray:
        """Closed-form solution at x_m; valid for any t > 0.

        Evaluation is deliberately not restricted to [t0, t1]: the closed
        form exists for all t > 0, only the template/warp factorization
        needs t > x_m/nu.
        """
        t = _as_grid(t)
        if np.any(t <= 0):
            raise OutOfSupport("convection-diffusion sensor signal needs t > 0")
        return (
            np.exp(-((self.x_m - self.nu * t) ** 2) / (4 * self.D * t))
            / np.sqrt(4 * np.pi * self.D * t)
        )

    def _root_term(self, z: np.ndarray, nu: float, D: float) -> tuple[np.ndarray, np.ndarray]:
        a = self.x_m * nu + 2 * D * z
        disc = a * a - nu**2 * self.x_m**2
        if np.any(disc <= 0):
            raise OutOfSupport("discriminant nonpositive; need z > 0")
        return a, np.sqrt(disc)

    def template(self, t) -> np.ndarray:
        """phi(t) = f(t) * exp(-t); defined for t > 0."""
        t = _as_grid(t)
        if np.any(t <= 0):
            raise OutOfSupport("template needs t > 0")
        a, root = self._root_term(t, self.nu, self.D)
        s = a + root
        return (
            (1.0 / self.nu)
            * math.sqrt(4 * self.D / math.pi)
            * s**1.5
            / (s**2 - self.nu**2 * self.x_m**2)
            * np.exp(-t)
        )

    def warp(self, t: np.ndarray) -> WarpMap:
        t = _as_grid(t)
        self._check_support(t)
        g = (self.x_m - self.nu * t) ** 2 / (4 * self.D * t)
        gdot = (self.nu**2 * t**2 - self.x_m**2) / (4 * self.D * t**2)
        return WarpMap(t, g, gdot)

    def inverse_warp(self, z) -> np.ndarray:
        """Increasing root of the warp quadratic, g^(-1)(z) for z >= 0."""
        z = _as_grid(z)
        if np.any(z < 0):
            raise OutOfSupport("inverse warp needs z >= 0")
        a = self.x_m * self.nu + 2 * self.D * z
        disc = a * a - self.nu**2 * self.x_m**2
        # disc = 4(D^2 z^2 + nu D x_m z) >= 0 for z >= 0; clip roundoff.
        return (a + np.sqrt(np.maximum(disc, 0.0))) / self.nu**2

    def inverse_warp_decreasing_root(self, z) -> np.ndarray:
        """The rejected second root; decreasing in z (kept for tests)."""
        z = _as_grid(z)
        a = self.x_m * self.nu + 2 * self.D * z
        disc = a * a - self.nu**2 * self.x_m**2
        return (a - np.sqrt(np.maximum(disc, 0.0))) / self.nu**2


@dataclass(frozen=True)
class TaylorNeighborhood:
    """Interval [center - half_width, center + half_width] for a positive parameter."""

    center: float
    half_width: float

    def __post_init__(self):
        if not (self.half_width > 0):
            raise ValueError("half_width must be positive")
        if not (self.center - self.half_width > 0):
            raise ValueError("parameter interval must stay positive")


@dataclass(frozen=True)
class AffineWarpFamily:
    """First-order family base(t) + coeff(t) * (param - center); exactly affine."""

    t: np.ndarray
    base: np.ndarray
    coeff: np.ndarray
    center: float

    def __call__(self, param: float) -> np.ndarray:
        return self.base + self.coeff * (param - self.center)


def taylor_inverse_warp_D(
    m: ConvDiffModel, nb: TaylorNeighborhood, t
) -> AffineWarpFamily:
    """Expansion of the inverse warp about D0 = nb.center at fixed nu."""
    t = _as_grid(t)
    if np.any(t <= 0):
        raise OutOfSupport("expansion coefficient needs t > 0")
    d0 = nb.center
    center_model = ConvDiffModel(m.nu, d0, m.x_m, t0=m.t0, t1=m.t1)
    base = center_model.inverse_warp(t)
    a, root = center_model._root_term(t, m.nu, d0)
    coeff = (2 * t / m.nu**2) * (1.0 + a / root)
    return AffineWarpFamily(t, base, coeff, d0)


def taylor_inverse_warp_nu(
    m: ConvDiffModel, nb: TaylorNeighborhood, t
) -> AffineWarpFamily:
    """Expansion of the inverse warp about nu0 = nb.center at fixed D."""
    t = _as_grid(t)
    if np.any(t <= 0):
        raise OutOfSupport("expansion coefficient needs t > 0")
    nu0 = nb.center
    center_model = ConvDiffModel(nu0, m.D, m.x_m, t0=None, t1=None)
    base = center_model.inverse_warp(t)
    a, root = center_model._root_term(t, nu0, m.D)
    coeff = -(1.0 / nu0**2) * (
        m.x_m + 4 * m.D * t / nu0 + 2 * root / nu0 - 2 * m.D * t * m.x_m / root
    )
    return AffineWarpFamily(t, base, coeff, nu0)


def estimate_wave_speed(template_cdt: CdtRepr, measured_cdt: CdtRepr, x_m: float) -> float:
    """Recover transport speed from the CDT-domain offset.

    For a pure delay x_m/nu the measured quantiles exceed the template's
    by that delay at every grid point, so nu = x_m / mean offset (mean in
    the trapezoid sense over the unit reference domain).
    """
    if template_cdt.domain != measured_cdt.domain:
        raise DimensionMismatch("CDT representations use different reference grids")
    y = template_cdt.domain.grid
    diff = measured_cdt.values - template_cdt.values
    if y.size < 2:
        shift = float(diff[0])
    else:
        shift = float(np.trapezoid(diff, y) / (y[-1] - y[0]))
    omega0_length = 1.0  # uniform reference lives on [0, 1]
    shift *= omega0_length
    if shift <= 0:
        raise NonPositiveShift("measured signal does not lag the template")
    return x_m / shift
