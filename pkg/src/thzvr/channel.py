"""Terahertz channel synthesis: spreading + molecular absorption loss, ULA
steering vectors, the direct MEC-user link, the rank-1 MEC-RIS matrices, and
the RIS-user vectors. Everything is deterministic given the geometry."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Position3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelParams:
    f: float                 # carrier frequency, Hz
    absorption_table: tuple[tuple[float, float], ...]  # (Hz, 1/m) rows, sorted
    m_antennas: int          # MEC array size
    n_elements: int          # RIS array size
    ris_gain: float          # RIS element gain (linear)
    c: float = 3.0e8

    def __post_init__(self):
        if self.f <= 0:
            raise ConfigError("carrier frequency must be positive")
        if self.m_antennas < 1 or self.n_elements < 1:
            raise ConfigError("array sizes must be >= 1")
        if self.ris_gain <= 0:
            raise ConfigError("RIS element gain must be positive")

    @property
    def wavelength(self) -> float:
        return self.c / self.f

    @property
    def tau(self) -> float:
        return absorption_coefficient(self.f, self.absorption_table)


@dataclass
class ChannelSet:
    """Per-slot channels: h[k] is the MEC-user vector (M,), g[k] the RIS-user
    vector (N,), g_up/g_down the MEC<->RIS matrices."""
    h: list[np.ndarray]
    g: list[np.ndarray]
    g_up: np.ndarray     # (M, N)
    g_down: np.ndarray   # (N, M)
    a_ris_from_mec: np.ndarray  # RIS steering toward the MEC, (N,)


def absorption_coefficient(f: float, table: tuple[tuple[float, float], ...]) -> float:
    """Piecewise-linear interpolation of the molecular absorption coefficient.
    The table is an engineering input; frequencies outside its range are a
    configuration error rather than an extrapolation."""
    if not table:
        raise ConfigError("absorption table is empty")
    freqs = [row[0] for row in table]
    taus = [row[1] for row in table]
    if any(f2 <= f1 for f1, f2 in zip(freqs, freqs[1:])):
        raise ConfigError("absorption table frequencies must be strictly increasing")
    if f < freqs[0] or f > freqs[-1]:
        raise ConfigError(
            f"frequency {f:.4g} Hz outside absorption table range "
            f"[{freqs[0]:.4g}, {freqs[-1]:.4g}]")
    return float(np.interp(f, freqs, taus))


def array_response(n_elems: int, phi: float, wavelength: float) -> np.ndarray:
    """Unit-norm ULA steering vector, element m = exp(-j*2*pi/lambda*m*sin(phi))/sqrt(n)."""
    if n_elems < 1:
        raise ConfigError("array size must be >= 1")
    m = np.arange(n_elems)
    return np.exp(-1j * (2.0 * np.pi / wavelength) * m * np.sin(phi)) / np.sqrt(n_elems)


def path_gain(f: float, d: float, tau: float, c: float = 3.0e8) -> complex:
    """Complex line-of-sight gain: spreading loss, molecular absorption, and
    the carrier phase of the time of arrival d/c."""
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    spread = c / (4.0 * np.pi * f * d)
    absorb = np.exp(-tau * d / 2.0)
    phase = np.exp(-2j * np.pi * f * (d / c))
    return complex(spread * absorb * phase)


def los_channel(params: ChannelParams, d_k: float, phi_k: float,
                los: bool = True) -> np.ndarray:
    """MEC-user channel vector; identically zero when the user is blocked."""
    if not los:
        return np.zeros(params.m_antennas, dtype=complex)
    gain = path_gain(params.f, d_k, params.tau, params.c)
    return gain * array_response(params.m_antennas, phi_k, params.wavelength)


def ris_path_compensation(params: ChannelParams) -> float:
    """Aperture compensation factor 2*sqrt(pi)*f*G_ris*N/c of the RIS panel."""
    return 2.0 * np.sqrt(np.pi) * params.f * params.ris_gain * params.n_elements / params.c


def ris_mec_channels(params: ChannelParams, d_mec_ris: float, phi_mec: float,
                     phi_ris: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rank-1 MEC<->RIS matrices sharing one scalar gain:
    g_up = s * a_mec a_ris^H (M x N) and g_down = s * a_ris a_mec^H (N x M)."""
    scalar = ris_path_compensation(params) * path_gain(
        params.f, d_mec_ris, params.tau, params.c)
    a_mec = array_response(params.m_antennas, phi_mec, params.wavelength)
    a_ris = array_response(params.n_elements, phi_ris, params.wavelength)
    g_up = scalar * np.outer(a_mec, a_ris.conj())
    g_down = scalar * np.outer(a_ris, a_mec.conj())
    return g_up, g_down, a_ris


def ris_user_channel(params: ChannelParams, d_b: float, phi_b: float) -> np.ndarray:
    """RIS-user channel vector (N,)."""
    gain = path_gain(params.f, d_b, params.tau, params.c)
    return gain * array_response(params.n_elements, phi_b, params.wavelength)


def azimuth(src: Position3, dst: Position3) -> float:
    return float(np.arctan2(dst.y - src.y, dst.x - src.x))


def distance3(a: Position3, b: Position3) -> float:
    return float(np.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2))


def build_channel_set(params: ChannelParams, mec: Position3, ris: Position3,
                      user_positions: list[Position3], los_flags: list[bool],
                      mec_broadside: float, ris_broadside: float) -> ChannelSet:
    """Synthesize all channels for one slot. Steering angles are azimuths of
    the displacement vectors measured from each array broadside."""
    d_mi = distance3(mec, ris)
    phi_mec = azimuth(mec, ris) - mec_broadside
    phi_ris = azimuth(ris, mec) - ris_broadside
    g_up, g_down, a_ris = ris_mec_channels(params, d_mi, phi_mec, phi_ris)
    h, g = [], []
    for pos, is_los in zip(user_positions, los_flags):
        d_k = distance3(mec, pos)
        h.append(los_channel(params, d_k, azimuth(mec, pos) - mec_broadside, is_los))
        d_b = distance3(ris, pos)
        g.append(ris_user_channel(params, d_b, azimuth(ris, pos) - ris_broadside))
    return ChannelSet(h=h, g=g, g_up=g_up, g_down=g_down, a_ris_from_mec=a_ris)
