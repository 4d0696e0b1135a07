"""Synthetic mmWave channel generation.

Links are built from normalized array steering vectors, per-path complex
gains with distance-dependent path loss and lognormal shadowing, and a
rank-one AP-IRS matrix. All randomness goes through an explicit
``numpy.random.Generator`` so realizations are reproducible, and the draw
order is fixed so that a given seed yields the same fading/shadowing
variates regardless of array sizes (this is what makes sweeps over N,
gains, distances, or blockage probability paired across grid points).

Angle convention: arrays live in the (x, y) plane. The AP ULA broadside
points along +y, the IRS URA faces -x (toward the AP). A link direction is
the directional sine sin(bearing - broadside). Elevation sines are 0 for
this planar geometry. Antenna element spacing is half a wavelength.

Gains in dBi enter the channel amplitudes as 10^(dBi/20).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SteeringVector",
    "ChannelSet",
    "MultiAntennaChannels",
    "PathLossParams",
    "GainParams",
    "ula_steering",
    "ura_steering",
    "path_loss_db",
    "sample_direct_channel",
    "sample_irs_links",
    "sample_channel_set",
    "sample_multi_antenna_channels",
    "perturb_csi",
]


@dataclass(frozen=True)
class SteeringVector:
    """Unit-norm array response; ``direction`` is the directional sine
    (a pair (azimuth, elevation) for planar arrays)."""

    entries: np.ndarray
    direction: float | tuple[float, float]

    @property
    def length(self) -> int:
        return self.entries.size


@dataclass(frozen=True)
class PathLossParams:
    """Log-distance path loss: PL(R) = chi_a + 10 chi_b log10(R) + kappa,
    kappa ~ N(0, sigma_kappa^2), everything in dB."""

    chi_a: float
    chi_b: float
    sigma_kappa: float

    def __post_init__(self):
        if self.chi_b <= 0:
            raise ValueError(f"chi_b must be positive, got {self.chi_b}")
        if self.sigma_kappa < 0:
            raise ValueError(f"sigma_kappa must be nonnegative, got {self.sigma_kappa}")


@dataclass(frozen=True)
class GainParams:
    """Element gains in dBi and the IRS relative reflection gain nu in dB.

    nu is defined by rho_I = nu + (rho_B + rho_U)/2 in the dB domain. Pass
    either rho_I or nu; the other is derived. Passing both is accepted only
    if consistent.
    """

    rho_U: float = 0.0
    rho_B: float = 9.82
    rho_I: float | None = None
    nu: float | None = None

    def __post_init__(self):
        mid = 0.5 * (self.rho_B + self.rho_U)
        if self.rho_I is None and self.nu is None:
            raise ValueError("one of rho_I or nu is required")
        if self.rho_I is None:
            object.__setattr__(self, "rho_I", self.nu + mid)
        elif self.nu is None:
            object.__setattr__(self, "nu", self.rho_I - mid)
        elif abs(self.rho_I - (self.nu + mid)) > 1e-9:
            raise ValueError(
                f"inconsistent gains: rho_I={self.rho_I} dBi vs nu+avg={self.nu + mid} dBi"
            )

    @property
    def amp_user(self) -> float:
        return 10.0 ** (self.rho_U / 20.0)

    @property
    def amp_ap(self) -> float:
        return 10.0 ** (self.rho_B / 20.0)

    @property
    def amp_irs(self) -> float:
        return 10.0 ** (self.rho_I / 20.0)


@dataclass(frozen=True)
class ChannelSet:
    """One realization of all links for K single-antenna users.

    h_direct: (K, M) AP-user channels. h_irs: (K, N) IRS-user channels.
    G: (M, N) rank-one AP-IRS matrix. blockage: (K,) LoS-blocked flags.
    """

    h_direct: np.ndarray
    h_irs: np.ndarray
    G: np.ndarray
    blockage: np.ndarray

    @property
    def num_users(self) -> int:
        return self.h_direct.shape[0]

    @property
    def num_ap_antennas(self) -> int:
        return self.h_direct.shape[1]

    @property
    def num_irs_elements(self) -> int:
        return self.G.shape[1]

    def without_irs(self) -> "ChannelSet":
        """View of the same realization with the IRS absent (N = 0)."""
        k, m = self.h_direct.shape
        return ChannelSet(
            h_direct=self.h_direct,
            h_irs=np.zeros((k, 0), dtype=complex),
            G=np.zeros((m, 0), dtype=complex),
            blockage=self.blockage,
        )


@dataclass(frozen=True)
class MultiAntennaChannels:
    """Per-user matrix channels for N_u-antenna users.

    H_direct: (K, M, N_u); H_irs: (K, N, N_u); G: (M, N).
    """

    H_direct: np.ndarray
    H_irs: np.ndarray
    G: np.ndarray
    blockage: np.ndarray

    @property
    def num_user_antennas(self) -> int:
        return self.H_direct.shape[2]

    def reduce(self, qbar: np.ndarray) -> ChannelSet:
        """Collapse to a SIMO set through unit transmit beamformers qbar (K, N_u)."""
        h_d = np.einsum("kmu,ku->km", self.H_direct, qbar)
        h_r = np.einsum("knu,ku->kn", self.H_irs, qbar)
        return ChannelSet(h_direct=h_d, h_irs=h_r, G=self.G, blockage=self.blockage)


def _ula(m: int, sine: float) -> np.ndarray:
    # centered index set {n - (m-1)/2}, half-wavelength spacing -> phase -pi*sine*idx
    idx = np.arange(m) - (m - 1) / 2.0
    return np.exp(-1j * np.pi * sine * idx) / np.sqrt(m)


def ula_steering(m: int, direction: float) -> SteeringVector:
    """Normalized ULA steering vector for a directional sine in [-1, 1]."""
    if m < 1:
        raise ValueError(f"array needs at least one element, got {m}")
    return SteeringVector(entries=_ula(m, direction), direction=float(direction))


def _ura(n_az: int, n_el: int, az: float, el: float) -> np.ndarray:
    return np.kron(_ula(n_az, az), _ula(n_el, el))


def ura_steering(n_az: int, n_el: int, az: float, el: float) -> SteeringVector:
    """URA steering vector: Kronecker product of the two ULA factors."""
    if n_az < 1 or n_el < 1:
        raise ValueError(f"array needs at least one element per axis, got {n_az}x{n_el}")
    return SteeringVector(entries=_ura(n_az, n_el, az, el), direction=(float(az), float(el)))


def path_loss_db(params: PathLossParams, distance_m: float, rng: np.random.Generator) -> float:
    """Path loss in dB over a distance, including a shadowing draw."""
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    kappa = rng.normal(0.0, params.sigma_kappa)  # scale 0 still consumes one variate
    return params.chi_a + 10.0 * params.chi_b * np.log10(distance_m) + kappa


def _complex_gain(pl_db: float, rng: np.random.Generator) -> complex:
    # CN(0, 10^(-PL/10)); PL in dB
    std = 10.0 ** (-pl_db / 20.0)
    re, im = rng.standard_normal(2)
    return std * (re + 1j * im) / np.sqrt(2.0)


def _directional_sine(from_xy, to_xy, broadside: float) -> float:
    bearing = np.arctan2(to_xy[1] - from_xy[1], to_xy[0] - from_xy[0])
    return float(np.sin(bearing - broadside))


_AP_BROADSIDE = np.pi / 2.0  # ULA along x axis, facing +y
_IRS_BROADSIDE = np.pi  # URA facing -x, toward the AP


def sample_direct_channel(cfg, user_xy, blocked: bool, rng: np.random.Generator) -> np.ndarray:
    """One AP-user channel: LoS term (dropped when blocked) plus L NLoS terms.

    Each path gets an independent gain CN(0, 10^(-PL/10)) with the LoS or
    NLoS loss parameters, and the whole sum is scaled by sqrt(M/(L+1)).
    The LoS variates are consumed even when the path is blocked so the
    stream stays aligned across blockage outcomes.
    """
    m, L = cfg.M, cfg.L
    dist = float(np.hypot(user_xy[0] - cfg.ap_xy[0], user_xy[1] - cfg.ap_xy[1]))
    amp = cfg.gain.amp_ap * cfg.gain.amp_user

    pl_los = path_loss_db(cfg.path_loss_los, dist, rng)
    xi_los = _complex_gain(pl_los, rng)
    los_sine = _directional_sine(cfg.ap_xy, user_xy, _AP_BROADSIDE)

    h = np.zeros(m, dtype=complex)
    if not blocked:
        h += xi_los * amp * _ula(m, los_sine)
    for _ in range(L):
        sine = rng.uniform(-1.0, 1.0)
        pl = path_loss_db(cfg.path_loss_nlos, dist, rng)
        xi = _complex_gain(pl, rng)
        h += xi * amp * _ula(m, sine)
    return np.sqrt(m / (L + 1)) * h


def sample_irs_links(cfg, user_positions, rng: np.random.Generator):
    """IRS-user LoS channels h_irs (K, N) and the rank-one AP-IRS matrix G (M, N)."""
    n_az, n_el = cfg.N_az, cfg.N_el
    n = n_az * n_el
    amp_iu = cfg.gain.amp_irs * cfg.gain.amp_user
    amp_bi = cfg.gain.amp_ap * cfg.gain.amp_irs

    h_irs = np.zeros((len(user_positions), n), dtype=complex)
    for k, xy in enumerate(user_positions):
        dist = float(np.hypot(xy[0] - cfg.irs_xy[0], xy[1] - cfg.irs_xy[1]))
        pl = path_loss_db(cfg.path_loss_los, dist, rng)
        xi = _complex_gain(pl, rng)
        az = _directional_sine(cfg.irs_xy, xy, _IRS_BROADSIDE)
        h_irs[k] = np.sqrt(n) * xi * amp_iu * _ura(n_az, n_el, az, 0.0)

    dist_g = float(np.hypot(cfg.irs_xy[0] - cfg.ap_xy[0], cfg.irs_xy[1] - cfg.ap_xy[1]))
    pl_g = path_loss_db(cfg.path_loss_los, dist_g, rng)
    xi_g = _complex_gain(pl_g, rng)
    phi = _directional_sine(cfg.ap_xy, cfg.irs_xy, _AP_BROADSIDE)
    az_g = _directional_sine(cfg.irs_xy, cfg.ap_xy, _IRS_BROADSIDE)
    a_ap = _ula(cfg.M, phi)
    a_irs = _ura(n_az, n_el, az_g, 0.0)
    G = np.sqrt(cfg.M * n) * xi_g * amp_bi * np.outer(a_ap, a_irs.conj())
    return h_irs, G


def sample_channel_set(cfg, rng: np.random.Generator) -> ChannelSet:
    """Draw one full realization (blockage states, direct links, IRS links)."""
    blocked = np.array([rng.uniform() < cfg.rho_b for _ in range(cfg.K)])
    h_direct = np.stack(
        [
            sample_direct_channel(cfg, cfg.user_xy[k], bool(blocked[k]), rng)
            for k in range(cfg.K)
        ]
    )
    h_irs, G = sample_irs_links(cfg, cfg.user_xy, rng)
    return ChannelSet(h_direct=h_direct, h_irs=h_irs, G=G, blockage=blocked)


def sample_multi_antenna_channels(cfg, rng: np.random.Generator) -> MultiAntennaChannels:
    """Realization for N_u-antenna users.

    Each path keeps the single complex gain of the SIMO model and gains a
    user-side ULA response at an independent uniform AoD sine; at N_u = 1
    that factor is [1], so the matrices are exactly the SIMO vectors. The
    variate count does not depend on N_u (AoD sines are always drawn).
    """
    m, L, n_u = cfg.M, cfg.L, cfg.N_u
    n = cfg.N_az * cfg.N_el
    amp_d = cfg.gain.amp_ap * cfg.gain.amp_user
    amp_iu = cfg.gain.amp_irs * cfg.gain.amp_user
    amp_bi = cfg.gain.amp_ap * cfg.gain.amp_irs

    blocked = np.array([rng.uniform() < cfg.rho_b for _ in range(cfg.K)])
    H_direct = np.zeros((cfg.K, m, n_u), dtype=complex)
    for k in range(cfg.K):
        xy = cfg.user_xy[k]
        dist = float(np.hypot(xy[0] - cfg.ap_xy[0], xy[1] - cfg.ap_xy[1]))
        pl_los = path_loss_db(cfg.path_loss_los, dist, rng)
        xi_los = _complex_gain(pl_los, rng)
        psi_los = rng.uniform(-1.0, 1.0)
        los_sine = _directional_sine(cfg.ap_xy, xy, _AP_BROADSIDE)
        H = np.zeros((m, n_u), dtype=complex)
        if not blocked[k]:
            H += xi_los * amp_d * np.outer(_ula(m, los_sine), _ula(n_u, psi_los).conj())
        for _ in range(L):
            sine = rng.uniform(-1.0, 1.0)
            pl = path_loss_db(cfg.path_loss_nlos, dist, rng)
            xi = _complex_gain(pl, rng)
            psi = rng.uniform(-1.0, 1.0)
            H += xi * amp_d * np.outer(_ula(m, sine), _ula(n_u, psi).conj())
        H_direct[k] = np.sqrt(m * n_u / (L + 1)) * H

    H_irs = np.zeros((cfg.K, n, n_u), dtype=complex)
    for k in range(cfg.K):
        xy = cfg.user_xy[k]
        dist = float(np.hypot(xy[0] - cfg.irs_xy[0], xy[1] - cfg.irs_xy[1]))
        pl = path_loss_db(cfg.path_loss_los, dist, rng)
        xi = _complex_gain(pl, rng)
        psi = rng.uniform(-1.0, 1.0)
        az = _directional_sine(cfg.irs_xy, xy, _IRS_BROADSIDE)
        H_irs[k] = np.sqrt(n * n_u) * xi * amp_iu * np.outer(
            _ura(cfg.N_az, cfg.N_el, az, 0.0), _ula(n_u, psi).conj()
        )

    dist_g = float(np.hypot(cfg.irs_xy[0] - cfg.ap_xy[0], cfg.irs_xy[1] - cfg.ap_xy[1]))
    pl_g = path_loss_db(cfg.path_loss_los, dist_g, rng)
    xi_g = _complex_gain(pl_g, rng)
    phi = _directional_sine(cfg.ap_xy, cfg.irs_xy, _AP_BROADSIDE)
    az_g = _directional_sine(cfg.irs_xy, cfg.ap_xy, _IRS_BROADSIDE)
    G = np.sqrt(m * n) * xi_g * amp_bi * np.outer(
        _ula(m, phi), _ura(cfg.N_az, cfg.N_el, az_g, 0.0).conj()
    )
    return MultiAntennaChannels(H_direct=H_direct, H_irs=H_irs, G=G, blockage=blocked)


def perturb_csi(h: np.ndarray, mu: float, rng: np.random.Generator) -> np.ndarray:
    """Bounded channel error: h + dh with ||dh|| <= mu ||h||.

    dh is a uniform direction on the complex sphere scaled by a uniform
    radius in [0, mu ||h||].
    """
    if mu < 0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    if mu == 0:
        return h.copy()
    d = rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape)
    nrm = np.linalg.norm(d)
    if nrm == 0.0:
        return h.copy()
    radius = rng.uniform() * mu * np.linalg.norm(h)
    return h + (radius / nrm) * d
