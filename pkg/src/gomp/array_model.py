"""Uniform linear array model.

Steering and steering-gradient vectors, grid dictionaries, and synthetic
multi-snapshot measurement generation with a controlled signal-to-noise
ratio. All values are immutable after construction and every operation is
a pure function of its inputs, so everything here is safe to share across
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def steering_vector(nu: float, m: int) -> np.ndarray:
    """Array response of an m-sensor ULA at spatial frequency nu.

    Entry k (0-based) is exp(1j * k * nu); every entry has unit modulus.

    Parameters
    ----------
    nu : float
        Spatial frequency in radians per sensor.
    m : int
        Number of sensors, at least 1.
    """
    if m < 1:
        raise ValueError(f"sensor count must be >= 1, got {m}")
    if not math.isfinite(nu):
        raise ValueError(f"spatial frequency must be finite, got {nu}")
    return np.exp(1j * nu * np.arange(m))


def steering_gradient(nu: float, m: int) -> np.ndarray:
    """Derivative of the steering vector with respect to nu.

    Entry k equals 1j * k * exp(1j * k * nu).
    """
    if m < 1:
        raise ValueError(f"sensor count must be >= 1, got {m}")
    if not math.isfinite(nu):
        raise ValueError(f"spatial frequency must be finite, got {nu}")
    k = np.arange(m)
    return 1j * k * np.exp(1j * nu * k)


def steering_matrix(nu: np.ndarray, m: int) -> np.ndarray:
    """Stack steering vectors for several frequencies as an m-by-K matrix."""
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    if m < 1:
        raise ValueError(f"sensor count must be >= 1, got {m}")
    if not np.all(np.isfinite(nu)):
        raise ValueError("spatial frequencies must be finite")
    return np.exp(1j * np.outer(np.arange(m), nu))


def spatial_frequency(theta: float, spacing_ratio: float = 0.5) -> float:
    """Convert an arrival angle (radians) to a spatial frequency.

    nu = 2*pi*(d/lambda)*sin(theta). With half-wavelength spacing the
    result spans [-pi, pi] without ambiguity.
    """
    return 2.0 * math.pi * spacing_ratio * math.sin(theta)


@dataclass(frozen=True)
class UlaConfig:
    """Uniform linear array geometry.

    M is the sensor count; spacing_ratio is the inter-sensor spacing in
    wavelengths (d/lambda), defaulting to half-wavelength.
    """

    M: int
    spacing_ratio: float = 0.5

    def __post_init__(self) -> None:
        if self.M < 2:
            raise ValueError(f"M >= 2 required, got {self.M}")
        if not self.spacing_ratio > 0:
            raise ValueError(f"spacing_ratio > 0 required, got {self.spacing_ratio}")


@dataclass(frozen=True)
class SourceScene:
    """Ground-truth emitters: spatial frequencies and source waveforms.

    nu has length K; X is the K-by-L matrix whose row k holds the L time
    samples emitted by source k.
    """

    nu: np.ndarray
    X: np.ndarray

    def __post_init__(self) -> None:
        nu = np.atleast_1d(np.asarray(self.nu, dtype=float))
        X = np.atleast_2d(np.asarray(self.X, dtype=complex))
        if nu.ndim != 1 or nu.size < 1:
            raise ValueError("nu must be a non-empty vector")
        if not np.all(np.isfinite(nu)):
            raise ValueError("all spatial frequencies must be finite")
        if X.shape[0] != nu.size:
            raise ValueError(f"X has {X.shape[0]} rows but nu has {nu.size} entries")
        if X.shape[1] < 1:
            raise ValueError("X must have at least one time sample")
        if np.any(np.all(X == 0, axis=1)):
            raise ValueError("every source waveform must be nonzero")
        nu.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "X", X)

    @property
    def K(self) -> int:
        return self.nu.size

    @property
    def L(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class Dictionary:
    """Steering dictionary over a uniform frequency grid.

    grid[p] = nu_max * p / P for p = 0..P-1 and column p of A_ring is the
    steering vector at grid[p], so every column has Euclidean norm sqrt(M).
    """

    grid: np.ndarray
    A_ring: np.ndarray

    def __post_init__(self) -> None:
        grid = np.atleast_1d(np.asarray(self.grid, dtype=float))
        A = np.atleast_2d(np.asarray(self.A_ring, dtype=complex))
        m, p = A.shape
        if grid.size != p:
            raise ValueError(f"grid has {grid.size} entries but A_ring has {p} columns")
        if p < m:
            raise ValueError(f"grid size P={p} must be at least the sensor count M={m}")
        expected = steering_matrix(grid, m)
        if not np.allclose(A, expected, atol=1e-9, rtol=0):
            raise ValueError("A_ring columns must be steering vectors at the grid frequencies")
        grid.setflags(write=False)
        A.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "A_ring", A)

    @property
    def M(self) -> int:
        return self.A_ring.shape[0]

    @property
    def P(self) -> int:
        return self.A_ring.shape[1]

    @property
    def spacing(self) -> float:
        """Grid cell width nu_max / P."""
        return float(self.grid[1] - self.grid[0]) if self.P > 1 else 0.0


@dataclass(frozen=True)
class MeasurementSet:
    """Projected snapshot matrix plus the metadata needed to score it."""

    Y: np.ndarray
    snr_db: float
    truth: SourceScene | None = None
    noise_seed: int = 0

    def __post_init__(self) -> None:
        Y = np.atleast_2d(np.asarray(self.Y, dtype=complex))
        Y.setflags(write=False)
        object.__setattr__(self, "Y", Y)

    @property
    def N(self) -> int:
        return self.Y.shape[0]

    @property
    def L(self) -> int:
        return self.Y.shape[1]


def build_dictionary(p: int, nu_max: float, m: int) -> Dictionary:
    """Uniform steering dictionary with P points on [0, nu_max).

    For the full circle (nu_max = 2*pi) with P >= M the rows are orthogonal
    and A_ring @ A_ring^H equals P * I.
    """
    if p < 1:
        raise ValueError(f"grid size must be >= 1, got {p}")
    if not nu_max > 0:
        raise ValueError(f"nu_max must be positive, got {nu_max}")
    grid = nu_max * np.arange(p) / p
    return Dictionary(grid=grid, A_ring=steering_matrix(grid, m))


def noise_scale_for_snr(signal_power: float, snr_db: float, noise_unit_power: float) -> float:
    """Noise amplitude sigma achieving a target SNR.

    Returns sigma such that signal_power / (sigma^2 * noise_unit_power)
    equals 10^(snr_db / 10). An infinite snr_db gives sigma = 0.
    """
    if signal_power < 0:
        raise ValueError(f"signal power must be nonnegative, got {signal_power}")
    if not noise_unit_power > 0:
        raise ValueError(f"unit noise power must be positive, got {noise_unit_power}")
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return math.sqrt(signal_power / (noise_unit_power * 10.0 ** (snr_db / 10.0)))


def synthesize_measurements(
    scene: SourceScene,
    phi,
    ula: UlaConfig,
    snr_db: float,
    seed: int,
) -> MeasurementSet:
    """Generate Y = Phi A(nu) X + Phi Nbar at a prescribed SNR.

    Noise is drawn in sensor space (Nbar, M-by-L, i.i.d. circular complex
    Gaussian) and then projected, so the post-projection noise is correlated
    whenever Phi has non-orthogonal rows. The noise scale is calibrated
    against the realized signal power of this draw, which makes the
    per-trial SNR exact and the output a pure function of
    (scene, phi, snr_db, seed). With snr_db = inf the noise branch is
    skipped entirely and Y equals Phi A(nu) X.

    ``phi`` may be a ProjectionMatrix or a plain N-by-M complex array.
    """
    phi_mat = np.asarray(getattr(phi, "phi", phi), dtype=complex)
    if phi_mat.ndim != 2:
        raise ValueError("projection matrix must be two-dimensional")
    n, m = phi_mat.shape
    if m != ula.M:
        raise ValueError(f"projection has {m} columns but the array has {ula.M} sensors")
    signal = phi_mat @ (steering_matrix(scene.nu, m) @ scene.X)
    if math.isinf(snr_db) and snr_db > 0:
        return MeasurementSet(Y=signal, snr_db=snr_db, truth=scene, noise_seed=seed)
    signal_power = float(np.linalg.norm(signal) ** 2)
    # E||Phi Nbar||_F^2 = L * ||Phi||_F^2 for unit-variance Nbar
    unit_power = scene.L * float(np.linalg.norm(phi_mat) ** 2)
    sigma = noise_scale_for_snr(signal_power, snr_db, unit_power)
    rng = np.random.default_rng(seed)
    nbar = (rng.standard_normal((m, scene.L)) + 1j * rng.standard_normal((m, scene.L))) / np.sqrt(2.0)
    y = signal + phi_mat @ (sigma * nbar)
    return MeasurementSet(Y=y, snr_db=snr_db, truth=scene, noise_seed=seed)
