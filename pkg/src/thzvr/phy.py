"""RIS reflection configuration and link spectral efficiencies.

Rates are scalar MISO expressions (single-antenna users): matched-filter
beamformers, per-user interference sums, and log2(1 + SINR).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, ConfigError


@dataclass(frozen=True)
class PhaseConfig:
    """Discrete RIS phase assignment: per-element level indices at resolution
    2*pi / 2**bits."""
    levels: tuple[int, ...]
    bits: int

    def __post_init__(self):
        n_levels = 1 << self.bits
        if any(not (0 <= l < n_levels) for l in self.levels):
            raise ConfigError("phase level out of range for bit depth")

    @property
    def phases(self) -> np.ndarray:
        return np.asarray(self.levels, dtype=float) * (2.0 * np.pi / (1 << self.bits))

    @classmethod
    def zero(cls, n_elements: int, bits: int) -> "PhaseConfig":
        return cls(levels=(0,) * n_elements, bits=bits)


def discrete_phase_set(bits: int) -> np.ndarray:
    """The 2**bits uniformly spaced phase values {0, d, ..., (L-1)d}, d = 2*pi/L."""
    if not (1 <= bits <= 8):
        raise ConfigError(f"phase bit depth must be in 1..8, got {bits}")
    n_levels = 1 << bits
    return np.arange(n_levels) * (2.0 * np.pi / n_levels)


def reflection_matrix(cfg: PhaseConfig) -> np.ndarray:
    """Diagonal unit-modulus reflection matrix diag(exp(j*theta_n))."""
    return np.diag(np.exp(1j * cfg.phases))


def quantize_phase(theta: float | np.ndarray, bits: int) -> np.ndarray:
    """Nearest discrete level index for a continuous phase (radians)."""
    n_levels = 1 << bits
    step = 2.0 * np.pi / n_levels
    return np.mod(np.rint(np.asarray(theta) / step).astype(int), n_levels)


def _rate_from_sinr(signal: float, interference: float, noise: float) -> float:
    if signal <= 0.0:
        return 0.0
    return float(np.log2(1.0 + signal / (interference + noise)))


def _theta_vec(theta: np.ndarray) -> np.ndarray:
    """Accept the N x N reflection matrix or its diagonal."""
    theta = np.asarray(theta)
    return np.diag(theta) if theta.ndim == 2 else theta


def uplink_effective_channels(ch: ChannelSet, theta: np.ndarray) -> list[np.ndarray]:
    """Two-ray uplink channel per user: direct plus RIS-reflected component."""
    tv = _theta_vec(theta)
    return [h + ch.g_up @ (tv * g) for h, g in zip(ch.h, ch.g)]


def uplink_rate(k: int, ch: ChannelSet, theta: np.ndarray, p_tx: float,
                noise_up: float) -> float:
    """Uplink spectral efficiency of user k with a matched-filter combiner and
    interference from every other user's two-ray channel."""
    eff = uplink_effective_channels(ch, theta)
    e_k = eff[k]
    norm = np.linalg.norm(e_k)
    if norm == 0.0:
        return 0.0
    u_k = e_k / norm
    signal = p_tx * abs(np.vdot(u_k, e_k)) ** 2
    interference = sum(p_tx * abs(np.vdot(u_k, eff[i])) ** 2
                       for i in range(len(eff)) if i != k)
    return _rate_from_sinr(signal, interference, noise_up)


def nlos_precoders(ch: ChannelSet, theta: np.ndarray,
                   v_nlos: list[int]) -> dict[int, np.ndarray]:
    """Matched downlink precoders for blocked users: (g_down^H Theta g_b),
    normalized; a zero cascade yields a zero precoder."""
    tv = _theta_vec(theta)
    precoders = {}
    for b in v_nlos:
        w = ch.g_down.conj().T @ (tv * ch.g[b])
        norm = np.linalg.norm(w)
        precoders[b] = w / norm if norm > 0 else w
    return precoders


def downlink_rate_los(k: int, ch: ChannelSet, theta: np.ndarray,
                      v_los: list[int], v_nlos: list[int], p_tx: float,
                      noise_down: float) -> float:
    """Downlink spectral efficiency of an unblocked user: matched precoder,
    interference from the other direct precoders plus RIS-precoder leakage."""
    if k not in v_los:
        raise ValueError(f"user {k} is not in the LoS group")
    h_k = ch.h[k]
    norm = np.linalg.norm(h_k)
    if norm == 0.0:
        return 0.0
    signal = p_tx * abs(np.vdot(h_k, h_k / norm)) ** 2
    interference = 0.0
    for i in v_los:
        if i == k:
            continue
        n_i = np.linalg.norm(ch.h[i])
        if n_i > 0:
            interference += p_tx * abs(np.vdot(h_k, ch.h[i] / n_i)) ** 2
    for j, v_j in nlos_precoders(ch, theta, v_nlos).items():
        interference += p_tx * abs(np.vdot(h_k, v_j)) ** 2
    return _rate_from_sinr(signal, interference, noise_down)


def downlink_rate_nlos(b: int, ch: ChannelSet, theta: np.ndarray,
                       v_nlos: list[int], p_tx: float, noise_down: float) -> float:
    """Downlink spectral efficiency of a blocked user served through the RIS;
    interference comes from the other blocked users' precoders."""
    if b not in v_nlos:
        raise ValueError(f"user {b} is not in the NLoS group")
    tv = _theta_vec(theta)
    precoders = nlos_precoders(ch, theta, v_nlos)
    row = ch.g[b].conj() * tv  # g_b^H Theta as a row vector
    cascade = row @ ch.g_down  # (M,)
    signal = p_tx * abs(cascade @ precoders[b]) ** 2
    interference = sum(p_tx * abs(cascade @ precoders[j]) ** 2
                       for j in v_nlos if j != b)
    return _rate_from_sinr(signal, interference, noise_down)


def downlink_rates(ch: ChannelSet, theta: np.ndarray, los_flags: list[bool],
                   p_tx: float, noise_down: float) -> np.ndarray:
    """All users' downlink rates under one reflection configuration."""
    v_los = [i for i, f in enumerate(los_flags) if f]
    v_nlos = [i for i, f in enumerate(los_flags) if not f]
    rates = np.zeros(len(los_flags))
    for k in v_los:
        rates[k] = downlink_rate_los(k, ch, theta, v_los, v_nlos, p_tx, noise_down)
    for b in v_nlos:
        rates[b] = downlink_rate_nlos(b, ch, theta, v_nlos, p_tx, noise_down)
    return rates
