"""Synthetic non-stationary V2V channels with a known, block-wise K-factor.

Tap 0 is Rician with a K drawn per stationarity block from the scenario
mixture; the later taps are Rayleigh. Taps are flat across the whole band so
every sub-band sees the same ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scenarios import CARRIER_FREQ, F_S, N_C, N_FREQ_BINS, T_S, ScenarioProfile, sample_k_values

# Tail taps relative to tap 0 (dB). Qualitative PDP shape only.
DEFAULT_TAIL_PDP_DB = (-10.0, -13.0, -16.0, -19.0)
DEFAULT_TAIL_PDP = tuple(10.0 ** (p / 10.0) for p in DEFAULT_TAIL_PDP_DB)

# Specular phase drift in cycles per stationarity block.
DEFAULT_DRIFT_CYCLES = 0.1

# Spacing of synthetic taps on the sub-band delay grid. The Hann window's
# kernel spans bins -1..1, so taps two bins apart do not leak into each other.
DEFAULT_TAP_SPACING = 2

# Substream labels; every random draw hangs off (seed, label, index...).
_STREAM_K = 0
_STREAM_TAPS = 1


def substream(seed: int, label: int, *index: int) -> np.random.Generator:
    """Generator for a labelled substream of ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(label, *index)))


@dataclass
class ChannelTransferFunction:
    """Sampled time-varying frequency response ``H[m, b]`` (time x frequency)."""

    samples: np.ndarray
    t_s: float = T_S
    f_s: float = F_S
    carrier_freq: float = CARRIER_FREQ

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.ndim != 2:
            raise ValueError(f"CTF samples must be 2-D (S x N), got shape {self.samples.shape}")
        if not np.iscomplexobj(self.samples):
            self.samples = self.samples.astype(np.complex128)
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("CTF contains non-finite entries")
        if self.t_s <= 0 or self.f_s <= 0:
            raise ValueError("t_s and f_s must be positive")

    @property
    def S(self) -> int:
        return self.samples.shape[0]

    @property
    def N(self) -> int:
        return self.samples.shape[1]

    @property
    def bandwidth(self) -> float:
        return self.N * self.f_s

    def is_measurement_grid(self) -> bool:
        """True for the 769-bin, 312.1 kHz grid that the sub-band defaults expect."""
        return self.N == N_FREQ_BINS and math.isclose(self.f_s, F_S, rel_tol=1e-3)


@dataclass
class KTrajectory:
    """Per-snapshot ground-truth K (dB), piecewise constant over blocks."""

    k_db: np.ndarray
    block_length: int

    @property
    def S(self) -> int:
        return len(self.k_db)

    @property
    def n_blocks(self) -> int:
        return -(-self.S // self.block_length)

    @property
    def block_k_db(self) -> np.ndarray:
        return self.k_db[:: self.block_length].copy()

    @classmethod
    def from_blocks(cls, block_k_db, block_length: int, S: int) -> "KTrajectory":
        k = np.repeat(np.asarray(block_k_db, dtype=float), block_length)[:S]
        if len(k) != S:
            raise ValueError("not enough blocks to cover S snapshots")
        return cls(k, block_length)


@dataclass
class SynthSpec:
    profile: ScenarioProfile
    duration: float = 10.0
    tail_pdp: tuple = DEFAULT_TAIL_PDP
    large_scale: np.ndarray | None = None
    seed: int = 0
    drift_cycles: float = DEFAULT_DRIFT_CYCLES
    n_bins: int = N_FREQ_BINS
    n_c: int = N_C
    tap_spacing: int = DEFAULT_TAP_SPACING
    t_s: float = T_S
    f_s: float = F_S
    carrier_freq: float = CARRIER_FREQ

    def __post_init__(self):
        if any(p <= 0 for p in self.tail_pdp):
            raise ValueError("tail_pdp entries must be positive")
        if self.duration <= 0:
            raise ValueError("duration must be positive")

    @property
    def S(self) -> int:
        return int(round(self.duration / self.t_s))


@dataclass
class SynthResult:
    ctf: ChannelTransferFunction
    ktraj: KTrajectory
    taps: np.ndarray
    tap_bins: list[int] = field(default_factory=list)


def generate_k_trajectory(profile: ScenarioProfile, S: int, seed=0) -> KTrajectory:
    """Block-i.i.d. K trajectory with one mixture draw per ``profile.s_k`` snapshots."""
    if S < profile.s_k:
        raise ValueError(f"S={S} shorter than one stationarity block ({profile.s_k})")
    n_blocks = -(-S // profile.s_k)
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed, _STREAM_K)
    blocks = sample_k_values(profile.gmm, n_blocks, rng)
    return KTrajectory.from_blocks(blocks, profile.s_k, S)


def _rician_split(k_db: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Specular power r^2 and diffuse power 2 sigma^2 for unit total power."""
    k_db = np.asarray(k_db, dtype=float)
    with np.errstate(over="ignore"):
        k_lin = np.power(10.0, k_db / 10.0)
    pure = np.isposinf(k_lin)
    specular = np.where(pure, 1.0, k_lin / (1.0 + np.where(pure, 0.0, k_lin)))
    diffuse = np.where(pure, 0.0, 1.0 / (1.0 + np.where(pure, 0.0, k_lin)))
    return specular, diffuse


def synth_taps(ktraj: KTrajectory, tail_pdp=DEFAULT_TAIL_PDP, S: int | None = None, seed=0,
               drift_cycles: float = DEFAULT_DRIFT_CYCLES) -> np.ndarray:
    """Complex taps ``h[m, n]``: tap 0 Rician with unit power, taps 1.. Rayleigh.

    Each block of ``ktraj.block_length`` snapshots draws from its own substream
    of ``seed``, so blocks can be produced independently.
    """
    S = ktraj.S if S is None else S
    if ktraj.S != S:
        raise ValueError(f"trajectory length {ktraj.S} != S={S}")
    tail = np.asarray(tail_pdp, dtype=float)
    L = ktraj.block_length
    taps = np.empty((S, 1 + len(tail)), dtype=np.complex128)
    specular, diffuse = _rician_split(ktraj.k_db)
    for b in range(ktraj.n_blocks):
        lo, hi = b * L, min((b + 1) * L, S)
        rng = substream(seed, _STREAM_TAPS, b)
        phase0 = rng.uniform(0.0, 2.0 * np.pi)
        m = np.arange(lo, hi)
        phase = phase0 + 2.0 * np.pi * drift_cycles * m / L
        g0 = rng.standard_normal((hi - lo, 2))
        taps[lo:hi, 0] = np.sqrt(specular[lo:hi]) * np.exp(1j * phase) + np.sqrt(diffuse[lo:hi] / 2.0) * (
            g0[:, 0] + 1j * g0[:, 1]
        )
        if len(tail):
            gt = rng.standard_normal((hi - lo, len(tail), 2))
            taps[lo:hi, 1:] = np.sqrt(tail / 2.0) * (gt[..., 0] + 1j * gt[..., 1])
    return taps


def apply_large_scale(taps: np.ndarray, g) -> np.ndarray:
    """Scale every tap at snapshot ``m`` by the amplitude gain ``g[m]``."""
    g = np.asarray(g, dtype=float)
    if g.shape != (taps.shape[0],):
        raise ValueError(f"gain trajectory must have shape ({taps.shape[0]},), got {g.shape}")
    if np.any(~(g > 0)):
        raise ValueError("large-scale gain must be strictly positive")
    return taps * g[:, None]


def sinusoidal_gain(S: int, period: float, depth_db: float = 6.0) -> np.ndarray:
    """Slow sinusoidal shadowing, peak-to-peak ``2 * depth_db`` in power."""
    m = np.arange(S)
    return np.power(10.0, depth_db * np.sin(2.0 * np.pi * m / period) / 20.0)


def tap_bins(n_taps: int, tap_spacing: int = DEFAULT_TAP_SPACING) -> list[int]:
    return [n * tap_spacing for n in range(n_taps)]


def taps_to_ctf(taps: np.ndarray, N: int = N_FREQ_BINS, f_s: float = F_S, t_s: float = T_S,
                carrier_freq: float = CARRIER_FREQ, n_c: int = N_C,
                tap_spacing: int = DEFAULT_TAP_SPACING, dtype=np.complex128,
                chunk: int = 4096) -> ChannelTransferFunction:
    """Frequency response of a tapped delay line on the sub-band delay grid.

    Tap ``n`` sits at delay ``n * tap_spacing`` sub-band bins, i.e.
    ``H[m, b] = sum_n h[m, n] exp(-j 2 pi b d_n / n_c)``. With this grid every
    sub-band transform sees tap ``n`` at delay bin ``d_n``.
    """
    taps = np.atleast_2d(np.asarray(taps))
    n_taps = taps.shape[1]
    if N < 2 * n_taps:
        raise ValueError(f"N={N} too small for {n_taps} taps")
    delays = np.asarray(tap_bins(n_taps, tap_spacing), dtype=float)
    if delays[-1] >= n_c:
        raise ValueError("tap delays exceed the sub-band delay span")
    steer = np.exp(-2j * np.pi * np.outer(delays, np.arange(N)) / n_c)
    out = np.empty((taps.shape[0], N), dtype=dtype)
    for lo in range(0, taps.shape[0], chunk):
        block = taps[lo : lo + chunk]
        acc = block[:, 0, None] * steer[0]
        for n in range(1, n_taps):
            acc += block[:, n, None] * steer[n]
        out[lo : lo + chunk] = acc
    return ChannelTransferFunction(out, t_s=t_s, f_s=f_s, carrier_freq=carrier_freq)


def synthesize(spec: SynthSpec, dtype=np.complex128) -> SynthResult:
    """Full synthesis: K trajectory, taps, optional large-scale gain, CTF."""
    S = spec.S
    ktraj = generate_k_trajectory(spec.profile, S, spec.seed)
    taps = synth_taps(ktraj, spec.tail_pdp, S, spec.seed, spec.drift_cycles)
    if spec.large_scale is not None:
        taps = apply_large_scale(taps, spec.large_scale)
    ctf = taps_to_ctf(taps, spec.n_bins, spec.f_s, spec.t_s, spec.carrier_freq, spec.n_c,
                      spec.tap_spacing, dtype=dtype)
    return SynthResult(ctf, ktraj, taps, tap_bins(taps.shape[1], spec.tap_spacing))
