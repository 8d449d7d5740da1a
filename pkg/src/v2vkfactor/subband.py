"""Sub-band impulse responses, first-tap alignment and large-scale fading removal."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import windows

from .errors import DegenerateInputError
from .scenarios import CARRIER_FREQ, F_S, N_C, N_FREQ_BINS, Q, T_S
from .synth import ChannelTransferFunction


def hanning_window(n_c: int = N_C) -> np.ndarray:
    """Periodic Hann window scaled to unit energy."""
    w = windows.hann(n_c, sym=False)
    return w / np.sqrt(np.sum(w * w))


@dataclass
class SubbandCir:
    """Per-sub-band impulse responses ``h[m, n, q]``.

    Attributes
    ----------
    h : ndarray, shape (S', N_c, Q)
        Complex taps over time, delay bin and sub-band.
    t_s : float
        Snapshot spacing in seconds.
    f_s : float
        Frequency-bin spacing of the source response (Hz).
    carrier_freq : float
        Centre frequency of the source response (Hz).
    n_source : int
        Number of frequency bins in the source response.
    start_index : int
        Absolute snapshot index of ``h[0]`` (non-zero after cropping).
    q_index : ndarray of int
        Source sub-band index of each slice along the last axis.
    """

    h: np.ndarray
    t_s: float = T_S
    f_s: float = F_S
    carrier_freq: float = CARRIER_FREQ
    n_source: int = N_FREQ_BINS
    start_index: int = 0
    q_index: np.ndarray | None = None

    def __post_init__(self):
        if self.h.ndim != 3:
            raise ValueError(f"h must have shape (S, N_c, Q), got {self.h.shape}")
        if self.q_index is None:
            self.q_index = np.arange(self.h.shape[2])
        self.q_index = np.asarray(self.q_index, dtype=np.int64)
        if len(self.q_index) != self.h.shape[2]:
            raise ValueError("q_index length does not match the sub-band axis")

    @property
    def S(self) -> int:
        return self.h.shape[0]

    @property
    def N_c(self) -> int:
        return self.h.shape[1]

    @property
    def Q(self) -> int:
        return self.h.shape[2]

    def subband_center_freqs(self) -> np.ndarray:
        """Centre frequency (Hz) of each sub-band; bin (N-1)/2 sits on the carrier."""
        centre_bin = self.q_index * (self.N_c - 1) + (self.N_c - 1) / 2.0
        return self.carrier_freq + (centre_bin - (self.n_source - 1) / 2.0) * self.f_s

    def select(self, subbands) -> "SubbandCir":
        idx = np.atleast_1d(subbands)
        return replace(self, h=self.h[:, :, idx], q_index=self.q_index[idx])

    def power(self) -> np.ndarray:
        """Total power per snapshot and sub-band, summed over delay bins."""
        return np.sum(self.h.real**2 + self.h.imag**2, axis=1)


@dataclass
class AlignmentReport:
    """Delay shifts (bins) applied per chunk and sub-band, shape (n_chunks, Q)."""

    shifts: np.ndarray
    chunk_length: int


def subband_transform(ctf: ChannelTransferFunction, n_c: int = N_C, q: int = Q,
                      subbands=None) -> SubbandCir:
    """Windowed inverse DFT of each 10 MHz slice of the response.

    ``h[m, n; q] = N_c**-0.5 * sum_c H[m, q(N_c-1)+c] W[c] exp(j 2 pi c n / N_c)``
    with ``W`` the unit-energy periodic Hann window, so the delay-domain energy
    of each (m, q) equals the windowed frequency-domain energy. Adjacent
    sub-bands share one edge bin.

    ``subbands`` restricts the output to a subset of sub-band indices.
    """
    if n_c < 2 or q < 1:
        raise ValueError("need n_c >= 2 and q >= 1")
    need = q * (n_c - 1) + 1
    if ctf.N < need:
        raise ValueError(f"CTF has {ctf.N} bins; {q} sub-bands of {n_c} need {need}")
    qs = np.arange(q) if subbands is None else np.atleast_1d(subbands).astype(np.int64)
    if np.any((qs < 0) | (qs >= q)):
        raise ValueError(f"sub-band indices must lie in [0, {q})")
    w = hanning_window(n_c)
    out = np.empty((ctf.S, n_c, len(qs)), dtype=np.complex128)
    for j, qq in enumerate(qs):
        lo = qq * (n_c - 1)
        block = ctf.samples[:, lo : lo + n_c].astype(np.complex128) * w
        out[:, :, j] = np.fft.ifft(block, axis=1, norm="ortho")
    return SubbandCir(out, t_s=ctf.t_s, f_s=ctf.f_s, carrier_freq=ctf.carrier_freq,
                      n_source=ctf.N, start_index=0, q_index=qs)


def align_first_tap(cir: SubbandCir, s_ls: int) -> tuple[SubbandCir, AlignmentReport]:
    """Cyclically shift each chunk of ``s_ls`` snapshots so its strongest bin lands at n=0.

    The strongest bin is the one with the largest mean power over the chunk.
    A trailing partial chunk is processed on its own.
    """
    if s_ls < 1:
        raise ValueError("s_ls must be positive")
    if cir.S < s_ls:
        raise ValueError(f"need at least s_ls={s_ls} snapshots, got {cir.S}")
    h = np.empty_like(cir.h)
    starts = range(0, cir.S, s_ls)
    shifts = np.zeros((len(starts), cir.Q), dtype=np.int64)
    for i, lo in enumerate(starts):
        chunk = cir.h[lo : lo + s_ls]
        p = np.mean(chunk.real**2 + chunk.imag**2, axis=0)  # (N_c, Q)
        peak = np.argmax(p, axis=0)
        shifts[i] = peak
        for j in range(cir.Q):
            h[lo : lo + s_ls, :, j] = np.roll(chunk[:, :, j], -peak[j], axis=1)
    return replace(cir, h=h), AlignmentReport(shifts, s_ls)


def local_power(cir: SubbandCir, s_ls: int) -> np.ndarray:
    """Moving average of total power over ``s_ls`` snapshots.

    Row ``i`` belongs to absolute snapshot ``m = start + s_ls//2 + i`` and
    averages snapshots ``m - s_ls//2 .. m - s_ls//2 + s_ls - 1``. Returns
    shape (S' - s_ls, Q).
    """
    if s_ls < 1:
        raise ValueError("s_ls must be positive")
    if cir.S <= s_ls:
        raise ValueError(f"averaging window s_ls={s_ls} exceeds data length {cir.S}")
    p = cir.power()
    cs = np.concatenate([np.zeros((1, cir.Q)), np.cumsum(p, axis=0)], axis=0)
    n_out = cir.S - s_ls
    return (cs[s_ls : s_ls + n_out] - cs[:n_out]) / s_ls


def remove_large_scale(cir: SubbandCir, s_ls: int) -> SubbandCir:
    """Normalize by the local average power; output is cropped to valid snapshots.

    The result has ``S' - s_ls`` rows and ``start_index`` advanced by ``s_ls // 2``.
    """
    eps = local_power(cir, s_ls)
    if np.any(eps <= 0) or not np.all(np.isfinite(eps)):
        raise DegenerateInputError("zero average power inside a large-scale window")
    half = s_ls // 2
    h = cir.h[half : half + eps.shape[0]] / np.sqrt(eps)[:, None, :]
    return replace(cir, h=h, start_index=cir.start_index + half)
