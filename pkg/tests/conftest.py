import numpy as np
import pytest

from irsuplink import (
    ChannelSet,
    EffectiveCoeffs,
    SolverState,
    effective_channel,
    effective_coeffs,
    mvdr_bank,
)


def crandn(rng, *shape):
    """Standard complex Gaussian array."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_channel_set(rng, K, M, N, blocked=False):
    """Synthetic unit-scale channels with an exactly rank-one G."""
    h_d = crandn(rng, K, M)
    h_r = crandn(rng, K, N)
    G = np.outer(crandn(rng, M), crandn(rng, N)) if N else np.zeros((M, 0), complex)
    return ChannelSet(h_direct=h_d, h_irs=h_r, G=G,
                      blockage=np.full(K, blocked))


def random_coeffs(rng, K, N, scale=1.0):
    """Unit-scale effective coefficients for beamformer tests."""
    b = scale * crandn(rng, K, K)
    g = scale * crandn(rng, K, K, N)
    f_norm_sq = rng.uniform(0.5, 2.0, K)
    return EffectiveCoeffs(b=b, g=g, f_norm_sq=f_norm_sq)


def feasible_power_instance(rng, K=3, M=8, rho_target=0.85, noise=1.0):
    """Random detectors/channels with protection ratios scaled so that the
    MVDR-updated interference matrix is comfortably feasible.

    Returns (h_eff, F, Ttilde, noise). Q scales linearly with Ttilde, so
    scaling Ttilde pins the spectral radius below rho_target.
    """
    from irsuplink import build_interference, spectral_radius

    h_eff = crandn(rng, K, M)
    p_probe = rng.uniform(0.5, 2.0, K)
    F = mvdr_bank(p_probe, h_eff, noise)
    Ttilde = rng.uniform(0.5, 1.5, K)
    im = build_interference(Ttilde, F, h_eff, noise)
    rho = spectral_radius(im.Q)
    if rho > 0:
        Ttilde = Ttilde * min(1.0, rho_target * rng.uniform(0.5, 1.0) / rho)
    return h_eff, F, Ttilde, noise


def consistent_state(rng, ch, Ttilde=None, noise=1.0, p=None, theta=None):
    """SolverState with MVDR detectors and cached effective channels."""
    K, _ = ch.h_direct.shape
    N = ch.num_irs_elements
    if theta is None:
        theta = np.exp(1j * rng.uniform(0, 2 * np.pi, N))
    h_eff = effective_channel(ch, theta)
    if p is None:
        p = rng.uniform(0.5, 2.0, K)
    F = mvdr_bank(p, h_eff, noise)
    return SolverState(p=p, F=F, theta=theta, h_eff=h_eff), effective_coeffs(ch, F)


@pytest.fixture
def rng():
    return np.random.default_rng(20240810)
