"""Spatial grid, wave-function container, analytic Gaussian states, observables.

Conventions used throughout the package:

* all quantities are SI;
* the momentum dual of a grid is k_j = 2*pi*fftfreq(n, dx), so a state's
  momentum amplitudes are phi_j = dx/sqrt(2*pi) * exp(-i k_j x_min) * FFT(psi)_j
  and Parseval holds as sum |phi|^2 dk = sum |psi|^2 dx.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, GridError, GridTooNarrowError, ZeroNormError

HBAR = 1.054571817e-34  # J s
CESIUM_MASS = 2.2069e-25  # kg

_TAIL_TOL = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ParticleSpec:
    """Point particle: mass and the value of hbar it is propagated with."""

    mass: float
    hbar: float = HBAR

    def __post_init__(self) -> None:
        if not (np.isfinite(self.mass) and self.mass > 0.0):
            raise ConfigError(f"mass must be positive, got {self.mass}")
        if not (np.isfinite(self.hbar) and self.hbar > 0.0):
            raise ConfigError(f"hbar must be positive, got {self.hbar}")


def cesium() -> ParticleSpec:
    return ParticleSpec(mass=CESIUM_MASS)


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid with a power-of-two number of points."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise GridError("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise GridError(f"x_max must exceed x_min, got [{self.x_min}, {self.x_max}]")
        n = self.n_points
        if n < 2 or (n & (n - 1)) != 0:
            raise GridError(f"n_points must be a power of two >= 2, got {n}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def x(self) -> np.ndarray:
        return _readonly(self.x_min + self.dx * np.arange(self.n_points))

    @property
    def k(self) -> np.ndarray:
        # momentum dual: dk = 2 pi / (n dx)
        return _readonly(2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx))

    @property
    def dk(self) -> float:
        return 2.0 * np.pi / (self.n_points * self.dx)


def build_grid(x_min: float, x_max: float, n_points: int) -> SpatialGrid:
    return SpatialGrid(x_min=float(x_min), x_max=float(x_max), n_points=int(n_points))


@dataclass(frozen=True)
class WaveFunction:
    """Complex amplitudes on a SpatialGrid with a timestamp."""

    grid: SpatialGrid
    amplitudes: np.ndarray
    time: float

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.n_points,):
            raise GridError(
                f"amplitudes shape {amps.shape} does not match grid "
                f"({self.grid.n_points} points)"
            )
        if not np.all(np.isfinite(amps.view(float))):
            raise ValueError("amplitudes contain NaN/Inf")
        object.__setattr__(self, "amplitudes", _readonly(amps))

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx)


@dataclass(frozen=True)
class GaussianPacketSpec:
    """Minimal-uncertainty Gaussian: |psi|^2 has std sigma_x at t=0."""

    center_x0: float
    sigma_x: float
    mean_velocity_v0: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.sigma_x) and self.sigma_x > 0.0):
            raise ConfigError(f"sigma_x must be positive, got {self.sigma_x}")


@dataclass(frozen=True)
class Moments:
    norm_sq: float
    mean_x: float
    std_x: float
    mean_p: float
    std_p: float


def free_sigma_x(packet: GaussianPacketSpec, particle: ParticleSpec, t: float) -> float:
    """Analytic position spread of the freely evolving packet at time t."""
    s0 = packet.sigma_x
    return s0 * np.sqrt(1.0 + (particle.hbar * t / (2.0 * particle.mass * s0 * s0)) ** 2)


def gaussian_free_state(
    packet: GaussianPacketSpec,
    particle: ParticleSpec,
    t: float,
    grid: SpatialGrid,
) -> WaveFunction:
    """Freely evolved minimal-uncertainty packet, evaluated analytically at t.

    At t=0 this is the defining Gaussian with std sigma_x, mean velocity v0.
    Raises GridTooNarrowError if the truncated tail probability exceeds 1e-10.
    """
    m, hb = particle.mass, particle.hbar
    s0 = packet.sigma_x
    k0 = m * packet.mean_velocity_v0 / hb
    center = packet.center_x0 + packet.mean_velocity_v0 * t
    sig_t = free_sigma_x(packet, particle, t)
    # Gaussian tail mass outside [x_min, x_max]
    from math import erfc, sqrt

    tail = 0.5 * erfc((center - grid.x_min) / (sig_t * sqrt(2.0))) + 0.5 * erfc(
        (grid.x_max - center) / (sig_t * sqrt(2.0))
    )
    if tail > _TAIL_TOL:
        raise GridTooNarrowError(
            f"packet tail mass {tail:.2e} outside grid [{grid.x_min}, {grid.x_max}] "
            f"exceeds {_TAIL_TOL}"
        )
    x = grid.x
    alpha = 1.0 + 1j * hb * t / (2.0 * m * s0 * s0)
    xc = x - packet.center_x0 - packet.mean_velocity_v0 * t
    amps = (
        (2.0 * np.pi * s0 * s0) ** -0.25
        / np.sqrt(alpha)
        * np.exp(
            -xc * xc / (4.0 * s0 * s0 * alpha)
            + 1j * k0 * (x - packet.center_x0)
            - 1j * hb * k0 * k0 * t / (2.0 * m)
        )
    )
    return WaveFunction(grid=grid, amplitudes=amps, time=t)


def momentum_amplitudes(psi: WaveFunction) -> np.ndarray:
    """Momentum-space amplitudes phi(k) on grid.k, Parseval-consistent."""
    g = psi.grid
    return (
        g.dx
        / np.sqrt(2.0 * np.pi)
        * np.exp(-1j * g.k * g.x_min)
        * np.fft.fft(psi.amplitudes)
    )


def observables(psi: WaveFunction, hbar: float = HBAR) -> Moments:
    """Norm and position/momentum moments of a (possibly unnormalized) state."""
    g = psi.grid
    dens = np.abs(psi.amplitudes) ** 2
    nsq = float(np.sum(dens) * g.dx)
    if nsq < 1e-300:
        raise ZeroNormError("state has zero norm, moments undefined")
    x = g.x
    mean_x = float(np.sum(x * dens) * g.dx / nsq)
    var_x = float(np.sum((x - mean_x) ** 2 * dens) * g.dx / nsq)
    phi = momentum_amplitudes(psi)
    kdens = np.abs(phi) ** 2
    ksum = float(np.sum(kdens) * g.dk)
    mean_k = float(np.sum(g.k * kdens) * g.dk / ksum)
    var_k = float(np.sum((g.k - mean_k) ** 2 * kdens) * g.dk / ksum)
    return Moments(
        norm_sq=nsq,
        mean_x=mean_x,
        std_x=np.sqrt(max(var_x, 0.0)),
        mean_p=hbar * mean_k,
        std_p=hbar * np.sqrt(max(var_k, 0.0)),
    )
