"""Scenario catalog: measurement constants, per-scenario windows and K-factor mixtures.

The built-in rows combine the average-speed / window-length table with the
bi-modal mixture parameters fitted per scenario. All K values are in dB.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.constants import speed_of_light

# Measurement setup (5.6 GHz carrier, 240 MHz in 769 bins, 307.2 us snapshots).
CARRIER_FREQ = 5.6e9
BANDWIDTH = 240e6
N_FREQ_BINS = 769
T_S = 307.2e-6
F_S = 312.1e3

# IEEE 802.11p sub-banding: 24 x 10 MHz, 33-point delay transform per sub-band.
SUBBAND_BANDWIDTH = 10e6
N_C = 33
Q = 24

# Extra samples on each side of the K window used for large-scale removal.
DELTA_S = 50

# Analyzed MIMO link (front-front, n_tx = n_rx = 3). Link numbering is
# l = 4*(n_tx - 1) + (5 - n_rx); only this single link is modelled.
ANALYZED_LINK = 10


@dataclass(frozen=True)
class GmmParams:
    """Two-component Gaussian mixture over K in dB.

    Component 1 (weight ``w``) is the low-K / nLOS mode, component 2 the LOS mode.
    """

    w: float
    mu1: float
    sigma1: float
    mu2: float
    sigma2: float

    def __post_init__(self):
        if not 0.0 <= self.w <= 1.0:
            raise ValueError(f"mixture weight must lie in [0, 1], got {self.w}")
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise ValueError("component standard deviations must be positive")
        if self.mu1 > self.mu2:
            raise ValueError(f"components must be ordered mu1 <= mu2 ({self.mu1} > {self.mu2})")

    @property
    def mean(self) -> float:
        return self.w * self.mu1 + (1.0 - self.w) * self.mu2

    def to_dict(self) -> dict:
        return {
            "w": self.w,
            "mu1_db": self.mu1,
            "sigma1_db": self.sigma1,
            "mu2_db": self.mu2,
            "sigma2_db": self.sigma2,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GmmParams":
        return cls(
            w=float(d["w"]),
            mu1=float(d["mu1_db"]),
            sigma1=float(d["sigma1_db"]),
            mu2=float(d["mu2_db"]),
            sigma2=float(d["sigma2_db"]),
        )


@dataclass(frozen=True)
class ScenarioProfile:
    """A named measurement scenario.

    Attributes
    ----------
    name : str
        Lower-case scenario identifier, e.g. ``"in-tunnel"``.
    avg_speed : float
        Average vehicle speed in m/s.
    s_k : int
        Samples per K-estimation window (about 100 wavelengths of travel).
    s_ls : int
        Samples per large-scale averaging window, ``s_k + 2 * DELTA_S``.
    gmm : GmmParams
        Mixture describing the scenario's K distribution.
    runs : int
        Number of measurement runs behind the reference fit (metadata).
    epsilon_bound : float or None
        Reported upper bound on the reference fit's KS distance.
    """

    name: str
    avg_speed: float
    s_k: int
    s_ls: int
    gmm: GmmParams
    runs: int = 1
    epsilon_bound: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.avg_speed <= 0:
            raise ValueError("avg_speed must be positive")
        if self.s_k <= 0:
            raise ValueError("s_k must be positive")
        if self.s_ls <= self.s_k:
            raise ValueError("s_ls must exceed s_k")

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "avg_speed_mps": self.avg_speed,
            "s_k": self.s_k,
            "s_ls": self.s_ls,
            "gmm": self.gmm.to_dict(),
            "runs": self.runs,
        }
        if self.epsilon_bound is not None:
            d["epsilon_bound"] = self.epsilon_bound
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioProfile":
        return cls(
            name=str(d["name"]).lower(),
            avg_speed=float(d["avg_speed_mps"]),
            s_k=int(d["s_k"]),
            s_ls=int(d["s_ls"]),
            gmm=GmmParams.from_dict(d["gmm"]),
            runs=int(d.get("runs", 1)),
            epsilon_bound=d.get("epsilon_bound"),
        )


# (average speed m/s, S_K) per scenario family.
_WINDOW_TABLE = {
    "road crossing": (8.3, 2100),
    "general los obstruction": (27.8, 630),
    "merging lanes": (22.2, 790),
    "slow traffic": (5.5, 3100),
    "approaching traffic jam": (16.7, 1050),
    "in-tunnel": (25.0, 700),
    "on-bridge": (27.8, 630),
}

# name, window-table family, (w, mu1, sigma1, mu2, sigma2), KS bound, runs
_MIXTURE_TABLE = [
    ("road crossing - suburban with traffic", "road crossing", (0.27, -42.7, 7.5, 3.7, 5.2), 0.04, 3),
    ("road crossing - suburban without traffic", "road crossing", (0.13, -43.0, 7.7, 4.5, 5.5), 0.02, 11),
    ("road crossing - urban single lane", "road crossing", (0.51, -43.3, 6.6, -0.6, 5.6), 0.06, 5),
    ("road crossing - urban multiple lane", "road crossing", (0.38, -41.1, 7.2, 0.1, 4.7), 0.05, 5),
    ("general los obstruction - highway", "general los obstruction", (0.05, -48.9, 7.9, 7.6, 7.5), 0.04, 12),
    ("merging lanes - rural", "merging lanes", (0.03, -29.9, 21.7, 14.2, 4.2), 0.02, 7),
    ("traffic congestion - slow traffic", "slow traffic", (0.12, -43.1, 8.0, 4.4, 6.5), 0.02, 11),
    ("traffic congestion - approaching traffic jam", "approaching traffic jam", (0.03, -49.2, 7.9, 8.1, 6.5), 0.02, 7),
    ("in-tunnel", "in-tunnel", (0.10, -43.1, 7.2, 4.7, 5.4), 0.02, 7),
    ("on-bridge", "on-bridge", (0.44, 10.9, 3.2, 14.6, 4.2), 0.02, 4),
]


def builtin_profiles() -> list[ScenarioProfile]:
    """Return the ten reference scenarios in catalog order."""
    profiles = []
    for name, family, gmm, eps, runs in _MIXTURE_TABLE:
        speed, s_k = _WINDOW_TABLE[family]
        profiles.append(
            ScenarioProfile(
                name=name,
                avg_speed=speed,
                s_k=s_k,
                s_ls=s_k + 2 * DELTA_S,
                gmm=GmmParams(*gmm),
                runs=runs,
                epsilon_bound=eps,
            )
        )
    return profiles


def scenario_names(profiles: Iterable[ScenarioProfile] | None = None) -> list[str]:
    return [p.name for p in (builtin_profiles() if profiles is None else profiles)]


def get_profile(name: str, profiles: Sequence[ScenarioProfile] | None = None) -> ScenarioProfile:
    """Look up a scenario by name.

    Matching is case-insensitive. An exact name wins; otherwise the query must
    match exactly one scenario either as one side of its ``" - "`` separator or
    as a substring (so ``"slow traffic"`` and ``"general LOS obstruction"`` work,
    while ``"road crossing"`` is ambiguous).
    """
    pool = list(builtin_profiles() if profiles is None else profiles)
    key = " ".join(name.lower().split())
    for p in pool:
        if p.name == key:
            return p
    parts = [p for p in pool if key in (s.strip() for s in p.name.split(" - "))]
    if len(parts) == 1:
        return parts[0]
    subs = [p for p in pool if key in p.name]
    if len(subs) == 1:
        return subs[0]
    candidates = parts or subs
    if candidates:
        raise KeyError(f"ambiguous scenario {name!r}; candidates: {[p.name for p in candidates]}")
    raise KeyError(f"unknown scenario {name!r}; valid names: {[p.name for p in pool]}")


def compute_window_lengths(avg_speed: float, carrier_freq: float = CARRIER_FREQ,
                           t_s: float = T_S) -> tuple[int, int]:
    """Window lengths (s_k, s_ls) covering 100 wavelengths of travel.

    >>> compute_window_lengths(8.3)
    (2100, 2200)
    """
    if avg_speed <= 0 or carrier_freq <= 0 or t_s <= 0:
        raise ValueError("speed, carrier frequency and t_s must all be positive")
    wavelength = speed_of_light / carrier_freq
    s_k = int(round(100.0 * wavelength / (avg_speed * t_s)))
    if s_k < 2:
        raise ValueError(f"window of {s_k} samples is too short; speed {avg_speed} m/s too high for t_s={t_s}")
    return s_k, s_k + 2 * DELTA_S


def make_profile(name: str, avg_speed: float, gmm: GmmParams, runs: int = 1,
                 carrier_freq: float = CARRIER_FREQ, t_s: float = T_S) -> ScenarioProfile:
    """Build a user-defined profile with windows derived from the speed."""
    s_k, s_ls = compute_window_lengths(avg_speed, carrier_freq, t_s)
    return ScenarioProfile(name=name.lower(), avg_speed=avg_speed, s_k=s_k, s_ls=s_ls, gmm=gmm, runs=runs)


def sample_k_values(gmm: GmmParams, count: int, seed=None) -> np.ndarray:
    """Draw ``count`` i.i.d. K values (dB) from the mixture.

    ``seed`` may be an int, a ``SeedSequence`` or a ``numpy.random.Generator``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    first = rng.random(count) < gmm.w
    z = rng.standard_normal(count)
    return np.where(first, gmm.mu1 + gmm.sigma1 * z, gmm.mu2 + gmm.sigma2 * z)


def profiles_to_json(profiles: Iterable[ScenarioProfile]) -> str:
    return json.dumps([p.to_dict() for p in profiles], indent=2) + "\n"


def profiles_from_json(text: str) -> list[ScenarioProfile]:
    data = json.loads(text)
    if isinstance(data, dict):
        data = [data]
    return [ScenarioProfile.from_dict(d) for d in data]


def save_profiles(profiles: Iterable[ScenarioProfile], path) -> None:
    Path(path).write_text(profiles_to_json(profiles))


def load_profiles(path) -> list[ScenarioProfile]:
    return profiles_from_json(Path(path).read_text())


__all__ = [
    "GmmParams",
    "ScenarioProfile",
    "builtin_profiles",
    "get_profile",
    "compute_window_lengths",
    "make_profile",
    "sample_k_values",
    "profiles_to_json",
    "profiles_from_json",
    "save_profiles",
    "load_profiles",
]
