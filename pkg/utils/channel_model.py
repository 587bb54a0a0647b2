"""
Transmission from the users to the detectors

Per-user pure loss, coherent interference on the beam-splitter network and
threshold detectors with independent dark counts. Produces single-click
probabilities, KG-round observables averaged over slice boxes and the
infinite-decoy Fock yields.
"""

import itertools
import logging
import math
from functools import reduce
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from models import ChannelConfig, KGObservables, OutputSignal, SliceCombination, YieldTensor
from utils.bs_network import bit_parity, user_columns
from utils.errors import ParameterError, UndefinedObservableError
from utils.passive_source import emitted_amplitudes, slice_interval
from utils.quadrature import integrate_average

logger = logging.getLogger(__name__)

DEFAULT_CLICK_TOL = 1e-4
# Largest total photon number accepted by fock_yields
MAX_FOCK_TOTAL = 60


def detector_amplitudes(signals: Sequence[OutputSignal], cfg: ChannelConfig) -> np.ndarray:
    """
    Coherent amplitude reaching every detector

    Args:
        signals: One OutputSignal per user
        cfg: Channel configuration

    Returns:
        Complex array beta_j = sum_i U[j, i] sqrt(eta_i I_i) e^{i (phase_i + offset_i)}
    """
    if len(signals) != cfg.n_users:
        raise ParameterError(f"expected {cfg.n_users} signals, got {len(signals)}")
    amps = np.array([s.amplitude for s in signals], dtype=complex)
    amps = amps * np.sqrt(cfg.eta) * np.exp(1j * cfg.offsets)
    return user_columns(cfg.topology.s, cfg.n_users) @ amps


def single_click_probs(betas, p_dark: float) -> np.ndarray:
    """
    Probability that detector j is the only one to click, for every j

    Args:
        betas: Complex amplitudes with the detector index on the last axis
        p_dark: Dark-count probability

    Returns:
        Array of the same shape as betas
    """
    if not 0.0 <= p_dark < 1.0:
        raise ParameterError(f"p_dark={p_dark} outside [0, 1)")
    log_quiet = math.log1p(-p_dark) - np.abs(np.asarray(betas)) ** 2
    others = np.sum(log_quiet, axis=-1, keepdims=True) - log_quiet
    return -np.expm1(log_quiet) * np.exp(others)


def prob_single_click(j: int, betas, p_dark: float) -> float:
    """[1 - (1-p) e^{-|b_j|^2}] prod_{k != j} (1-p) e^{-|b_k|^2}"""
    betas = np.asarray(betas, dtype=complex)
    if not 0 <= j < betas.shape[-1]:
        raise ParameterError(f"detector {j} outside 0..{betas.shape[-1] - 1}")
    return float(single_click_probs(betas, p_dark)[..., j])


def bit_patterns(n_users: int) -> np.ndarray:
    """All 2^N bit assignments, row b has user i's bit in column i"""
    return np.array(list(itertools.product((0, 1), repeat=n_users)), dtype=np.int64)


def parity_table(n_detectors: int, n_users: int) -> np.ndarray:
    return np.array([[bit_parity(j, i) for i in range(n_users)] for j in range(n_detectors)], dtype=np.int64)


def combination_box(combo: SliceCombination, slices: int):
    """Phase box (phi_01, phi_02, phi_11, ...) of a slice combination"""
    combo.check_range(slices)
    return [slice_interval(k, slices) for k in combo.k]


def kg_observables(
    cfg: ChannelConfig, combo: Optional[SliceCombination] = None, rel_tol: float = DEFAULT_CLICK_TOL
) -> KGObservables:
    """
    Click probabilities of every KG bit pattern of a slice combination

    Each user's bit 1 is its bit-0 slice pair shifted by M/2, which negates the
    emitted amplitude. The click probability is averaged over all phases uniform
    in the combination's box.

    Args:
        cfg: Channel configuration
        combo: Slice combination naming the bit-0 pattern (canonical if omitted)
        rel_tol: Cubature tolerance

    Returns:
        KGObservables with click_probs[b, j]

    Raises:
        NumericalToleranceError: If the cubature does not converge
    """
    n_users = cfg.n_users
    combo = combo or SliceCombination.canonical(n_users)
    if combo.n_users != n_users:
        raise ParameterError(f"combination has {combo.n_users} users, config has {n_users}")
    patterns = bit_patterns(n_users)
    signs = np.where(patterns == 1, -1.0, 1.0)
    columns = user_columns(cfg.topology.s, n_users)
    scale = np.sqrt(cfg.eta) * np.exp(1j * cfg.offsets)
    u_max = cfg.source.u_max
    p_dark = cfg.p_dark

    def integrand(points: np.ndarray) -> np.ndarray:
        amps = emitted_amplitudes(points[:, 0::2], points[:, 1::2], u_max) * scale
        betas = np.einsum("ji,bi,pi->pbj", columns, signs, amps)
        return single_click_probs(betas, p_dark).reshape(points.shape[0], -1)

    result = integrate_average(integrand, combination_box(combo, cfg.slices), rel_tol=rel_tol)
    click_probs = np.clip(np.asarray(result.value).reshape(len(patterns), cfg.n_detectors), 0.0, 1.0)
    return KGObservables(
        click_probs=click_probs,
        bit_patterns=patterns,
        parity=parity_table(cfg.n_detectors, n_users),
    )


def exact_kg_observables(cfg: ChannelConfig) -> KGObservables:
    """KG observables for signals of exactly +-sqrt(u_max) (no phase averaging)"""
    patterns = bit_patterns(cfg.n_users)
    signs = np.where(patterns == 1, -1.0, 1.0)
    amps = math.sqrt(cfg.source.u_max) * np.sqrt(cfg.eta) * np.exp(1j * cfg.offsets)
    betas = np.einsum("ji,bi,i->bj", user_columns(cfg.topology.s, cfg.n_users), signs, amps)
    return KGObservables(
        click_probs=single_click_probs(betas, cfg.p_dark),
        bit_patterns=patterns,
        parity=parity_table(cfg.n_detectors, cfg.n_users),
    )


def pr_omega_from_observables(obs: KGObservables, j: int) -> float:
    return float(np.mean(obs.click_probs[:, j]))


def qber_from_observables(obs: KGObservables, j: int, i: int) -> float:
    """Parity-corrected disagreement between user 0 and user i given a click at j"""
    if i < 1 or i >= obs.bit_patterns.shape[1]:
        raise ParameterError(f"user {i} is not a partner of user 0")
    column = obs.click_probs[:, j]
    denominator = float(np.sum(column))
    if denominator <= 0.0:
        raise UndefinedObservableError(f"Pr(Omega_{j}|KG) is zero, QBER undefined")
    b = obs.bit_patterns
    mismatch = b[:, 0] != (b[:, i] ^ obs.parity[j, i])
    return min(float(np.sum(column[mismatch]) / denominator), 1.0)


def pr_omega_given_kg(
    j: int, combo: SliceCombination, cfg: ChannelConfig, rel_tol: float = DEFAULT_CLICK_TOL
) -> float:
    """Single-click probability at detector j averaged over the KG-accepted patterns of combo"""
    if not 0 <= j < cfg.n_detectors:
        raise ParameterError(f"detector {j} outside 0..{cfg.n_detectors - 1}")
    return pr_omega_from_observables(kg_observables(cfg, combo, rel_tol), j)


def qber_pair(
    j: int,
    i: int,
    cfg: ChannelConfig,
    combo: Optional[SliceCombination] = None,
    rel_tol: float = DEFAULT_CLICK_TOL,
) -> float:
    """
    Pr(X_0 != (-1)^(j.i) X_i | Omega_j, KG)

    Raises:
        UndefinedObservableError: If no single click at j is possible
    """
    if not 0 <= j < cfg.n_detectors:
        raise ParameterError(f"detector {j} outside 0..{cfg.n_detectors - 1}")
    return qber_from_observables(kg_observables(cfg, combo, rel_tol), j, i)


def apply_per_user_channels(tensor: np.ndarray, matrices: Sequence[np.ndarray], first_axis: int = 0) -> np.ndarray:
    """
    result[.., n_0, .., n_{N-1}] = sum_m prod_i M_i[n_i, m_i] tensor[.., m_0, .., m_{N-1}]

    The user axes start at first_axis; each matrix is contracted along its own axis.
    """
    out = np.asarray(tensor, dtype=float)
    for offset, matrix in enumerate(matrices):
        axis = first_axis + offset
        out = np.moveaxis(np.tensordot(matrix, out, axes=([1], [axis])), 0, axis)
    return out


def _all_at_detector(j: int, cfg: ChannelConfig, n_max: int) -> np.ndarray:
    """
    Probability that every photon of a lossless Fock input lands on detector j

    m!/prod m_i! prod |U_ji|^(2 m_i) on the cube m_i <= n_max; the vacuum entry
    holds p_dark (a dark click at j).
    """
    weights = np.abs(user_columns(cfg.topology.s, cfg.n_users)[j]) ** 2
    grid = np.arange(n_max + 1)
    log_terms = [grid * math.log(w) - gammaln(grid + 1) for w in weights]
    log_cube = reduce(np.add.outer, log_terms)
    totals = reduce(np.add.outer, [grid] * cfg.n_users)
    cube = np.exp(log_cube + gammaln(totals + 1))
    cube[(0,) * cfg.n_users] = cfg.p_dark
    return cube


def survival_matrix(eta: float, n_max: int) -> np.ndarray:
    """Binomial thinning B[n, m] = C(n, m) eta^m (1-eta)^(n-m)"""
    n = np.arange(n_max + 1)
    nn, mm = np.meshgrid(n, n, indexing="ij")
    return np.where(mm <= nn, binom.pmf(mm, nn, eta), 0.0)


def yield_tensor(cfg: ChannelConfig, n_bar: int) -> YieldTensor:
    """
    Infinite-decoy single-click yields for every detector and n_i <= n_bar

    Loss thins each user's photons binomially; a single click at j then needs
    every survivor to exit at j (or a dark count at j without survivors) and no
    other detector to fire.
    """
    if n_bar < 0:
        raise ParameterError("n_bar must be >= 0")
    if n_bar * cfg.n_users > MAX_FOCK_TOTAL:
        raise ParameterError(f"photon total {n_bar * cfg.n_users} above supported {MAX_FOCK_TOTAL}")
    quiet = (1.0 - cfg.p_dark) ** (cfg.n_detectors - 1)
    thinning = [survival_matrix(float(e), n_bar) for e in cfg.eta]
    values = np.stack(
        [quiet * apply_per_user_channels(_all_at_detector(j, cfg, n_bar), thinning) for j in range(cfg.n_detectors)]
    )
    logger.debug("built yield tensor for %d detectors, n_bar=%d", cfg.n_detectors, n_bar)
    return YieldTensor(values=np.clip(values, 0.0, 1.0), n_bar=n_bar)


def fock_yields(n_vec: Sequence[int], j: int, cfg: ChannelConfig) -> float:
    """
    Single-click probability at detector j for Fock inputs n_vec

    Raises:
        ParameterError: On a wrong vector length, negative entries or a photon total above MAX_FOCK_TOTAL
    """
    n_vec = [int(n) for n in n_vec]
    if len(n_vec) != cfg.n_users:
        raise ParameterError(f"expected {cfg.n_users} photon numbers, got {len(n_vec)}")
    if any(n < 0 for n in n_vec):
        raise ParameterError("photon numbers must be >= 0")
    if sum(n_vec) > MAX_FOCK_TOTAL:
        raise ParameterError(f"photon total {sum(n_vec)} above supported {MAX_FOCK_TOTAL}")
    if not 0 <= j < cfg.n_detectors:
        raise ParameterError(f"detector {j} outside 0..{cfg.n_detectors - 1}")
    n_max = max(n_vec)
    quiet = (1.0 - cfg.p_dark) ** (cfg.n_detectors - 1)
    thinning = [survival_matrix(float(e), n_max)[n : n + 1] for e, n in zip(cfg.eta, n_vec)]
    value = apply_per_user_channels(_all_at_detector(j, cfg, n_max), thinning)
    return float(quiet * value.reshape(-1)[0])
