"""Split-operator evolution under H = p^2/2m + (hbar/2)(shift(x) - i decay(x)).

The scheme is Strang splitting: a half potential factor, a full spectral
kinetic step, a half potential factor. Interior half factors are merged, so
the main loop costs two FFTs and one pointwise multiply per step; sampled
states are closed with the trailing half factor before observables are taken.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ParticleSpec, SpatialGrid, WaveFunction
from .exceptions import ConfigError, GridError, InstabilityError

__all__ = [
    "ComplexPotentialField",
    "DetectionRecord",
    "step",
    "evolve_conditional",
    "peak_time",
]


@dataclass(frozen=True)
class ComplexPotentialField:
    """Samples of the decay rate A(x)chi^2 and line shift delta(x)chi^2, in 1/s."""

    grid: SpatialGrid
    decay_rate: np.ndarray
    real_shift: np.ndarray

    def __post_init__(self) -> None:
        decay = np.asarray(self.decay_rate, dtype=float)
        shift = np.asarray(self.real_shift, dtype=float)
        n = self.grid.n_points
        if decay.shape != (n,) or shift.shape != (n,):
            raise GridError("potential arrays must match the grid length")
        if not (np.all(np.isfinite(decay)) and np.all(np.isfinite(shift))):
            raise ValueError("potential contains NaN/Inf")
        if np.any(decay < 0.0):
            raise ConfigError("decay_rate must be >= 0 everywhere")
        decay.setflags(write=False)
        shift.setflags(write=False)
        object.__setattr__(self, "decay_rate", decay)
        object.__setattr__(self, "real_shift", shift)


@dataclass(frozen=True)
class DetectionRecord:
    """P0(t), w1(t) and the trapezoid-cumulative detection probability."""

    times: np.ndarray
    survival_p0: np.ndarray
    density_w1: np.ndarray
    cumulative_detected: np.ndarray


def _kinetic_factor(grid: SpatialGrid, particle: ParticleSpec, dt: float) -> np.ndarray:
    k = grid.k
    return np.exp(-1j * particle.hbar * k * k * dt / (2.0 * particle.mass))


def _potential_half_factor(pot: ComplexPotentialField, dt: float) -> np.ndarray:
    # exp(-i H_V dt/(2 hbar)) with H_V = (hbar/2)(shift - i decay)
    return np.exp(-(pot.decay_rate + 1j * pot.real_shift) * (dt * 0.25))


def step(
    psi: WaveFunction, pot: ComplexPotentialField, particle: ParticleSpec, dt: float
) -> WaveFunction:
    """One Strang step of size dt."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if pot.grid != psi.grid:
        raise GridError("potential and state live on different grids")
    vhalf = _potential_half_factor(pot, dt)
    kin = _kinetic_factor(psi.grid, particle, dt)
    amps = vhalf * np.fft.ifft(np.fft.fft(psi.amplitudes * vhalf) * kin)
    if not np.all(np.isfinite(amps.view(float))):
        raise InstabilityError(f"non-finite amplitudes after step at t={psi.time}")
    return WaveFunction(grid=psi.grid, amplitudes=amps, time=psi.time + dt)


def _evolve_batch(
    amps: np.ndarray,
    grid: SpatialGrid,
    particle: ParticleSpec,
    pot: ComplexPotentialField,
    dt: float,
    n_steps: int,
    sample_stride: int,
    snapshot_steps: np.ndarray | None = None,
):
    """Evolve a (r, n) batch in place; sample w1 and norm^2 rows at the stride.

    Returns (sample_steps, w1[r, n_samples], norm_sq[r, n_samples], amps_final,
    snapshots). The merged-half-step loop keeps the per-step cost at two
    batched FFTs plus one multiply; sampled copies are closed with the
    trailing half factor. If snapshot_steps is given, the closed states at
    those step indices are collected into snapshots[len(snapshot_steps), r, n].
    """
    vhalf = _potential_half_factor(pot, dt)
    vfull = vhalf * vhalf
    kin = _kinetic_factor(grid, particle, dt)
    decay = pot.decay_rate
    mask = decay > 0.0
    dvals = decay[mask]
    dx = grid.dx
    samples = []
    sample_steps = []
    snap_pos: dict[int, int] = {}
    snaps = None
    if snapshot_steps is not None:
        snap_pos = {int(s): j for j, s in enumerate(snapshot_steps)}
        snaps = np.empty((len(snapshot_steps),) + amps.shape, dtype=complex)
        if 0 in snap_pos:
            snaps[snap_pos[0]] = amps

    def _take(a: np.ndarray, s: int) -> None:
        dens = np.abs(a) ** 2
        w1 = dens[..., mask] @ dvals * dx
        nsq = np.sum(dens, axis=-1) * dx
        samples.append((w1, nsq))
        sample_steps.append(s)

    _take(amps, 0)
    amps *= vhalf
    for s in range(1, n_steps + 1):
        amps = np.fft.ifft(np.fft.fft(amps, axis=-1) * kin, axis=-1)
        wanted_sample = s % sample_stride == 0 or s == n_steps
        wanted_snap = s in snap_pos
        if wanted_sample or wanted_snap:
            closed = amps * vhalf
            if not np.isfinite(closed.view(float).sum()):
                raise InstabilityError(f"non-finite amplitudes at step {s}")
            if wanted_sample:
                _take(closed, s)
            if wanted_snap:
                snaps[snap_pos[s]] = closed
        if s < n_steps:
            amps *= vfull
    amps *= vhalf
    w1 = np.stack([w for w, _ in samples], axis=-1)
    nsq = np.stack([n for _, n in samples], axis=-1)
    return np.array(sample_steps), w1, nsq, amps, snaps


def evolve_conditional(
    psi0: WaveFunction,
    pot: ComplexPotentialField,
    particle: ParticleSpec,
    t_final: float,
    dt: float,
    sample_stride: int = 1,
) -> tuple[WaveFunction, DetectionRecord]:
    """Evolve to t_final recording P0(t) = <psi|psi> and w1(t) = int A |psi|^2 dx.

    The returned state is the conditional (unnormalized) state at t_final.
    """
    if pot.grid != psi0.grid:
        raise GridError("potential and state live on different grids")
    if t_final <= psi0.time:
        raise ValueError(f"t_final {t_final} must exceed the state time {psi0.time}")
    if sample_stride < 1:
        raise ValueError("sample_stride must be >= 1")
    n_steps = int(round((t_final - psi0.time) / dt))
    if n_steps < 1:
        raise ValueError("t_final - t0 shorter than one step")
    amps = np.array(psi0.amplitudes, dtype=complex)
    steps, w1, nsq, amps, _ = _evolve_batch(
        amps[None, :], psi0.grid, particle, pot, dt, n_steps, sample_stride
    )
    times = psi0.time + steps * dt
    w1 = w1[0]
    p0 = nsq[0]
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (w1[1:] + w1[:-1]) * np.diff(times))))
    record = DetectionRecord(
        times=times, survival_p0=p0, density_w1=w1, cumulative_detected=cum
    )
    psi_final = WaveFunction(
        grid=psi0.grid, amplitudes=amps[0], time=psi0.time + n_steps * dt
    )
    return psi_final, record


def peak_time(record: DetectionRecord) -> float:
    """Location of the w1 maximum, parabolically refined between samples."""
    w = record.density_w1
    i = int(np.argmax(w))
    if i == 0 or i == len(w) - 1:
        return float(record.times[i])
    y0, y1, y2 = w[i - 1], w[i], w[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom == 0.0:
        return float(record.times[i])
    delta = 0.5 * (y0 - y2) / denom
    dt = record.times[i + 1] - record.times[i]
    return float(record.times[i] + delta * dt)
