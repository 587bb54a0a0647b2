"""
Fully passive source of one user

Two independent random-phase pulses of intensity u_max/2 meet on a 50:50 beam
splitter and the constructive port is sent out. The user measures both phases,
assigns each to one of M slices (slice 1 centred on phase 0, indices ascending
clockwise) and, in key rounds, maps the top/bottom slice to bit 0/1.
"""

import math
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.stats import binom

from models import OutputSignal, PulsePair, SourceConfig, TransitionMatrix
from utils.errors import ParameterError
from utils.quadrature import integrate_average

TWO_PI = 2.0 * math.pi

DEFAULT_TRANSITION_TOL = 1e-6


def sample_pulse_pair(rng: np.random.Generator) -> PulsePair:
    """Draw the two independent uniform phases of one round"""
    phi1, phi2 = rng.uniform(0.0, TWO_PI, size=2)
    return PulsePair(phi1=float(phi1) % TWO_PI, phi2=float(phi2) % TWO_PI)


def slice_indices(phases, slices: int) -> np.ndarray:
    """Vectorised slice assignment; slice k covers [c_k - pi/M, c_k + pi/M) with c_k = -(k-1) 2pi/M"""
    width = TWO_PI / slices
    shifted = np.mod(np.asarray(phases, dtype=float) + 0.5 * width, TWO_PI)
    sector = np.floor(shifted / width).astype(np.int64)
    return np.mod(-sector, slices) + 1


def slice_of(phase: float, slices: int) -> int:
    """Slice index 1..M of a phase (taken mod 2pi)"""
    if slices < 2 or slices % 2:
        raise ParameterError(f"slice count M={slices} must be even and >= 2")
    return int(slice_indices(np.array([phase]), slices)[0])


def slice_center(k: int, slices: int) -> float:
    """Centre phase of slice k, in (-2pi, 0]"""
    return -(k - 1) * TWO_PI / slices


def slice_interval(k: int, slices: int) -> Tuple[float, float]:
    half = math.pi / slices
    center = slice_center(k, slices)
    return center - half, center + half


def wrap_phase(angle):
    """Map angles to (-pi, pi]"""
    wrapped = np.mod(np.asarray(angle, dtype=float) + math.pi, TWO_PI) - math.pi
    return np.where(wrapped == -math.pi, math.pi, wrapped)


def output_signal(p: PulsePair, cfg: SourceConfig) -> OutputSignal:
    """
    Signal sent by the source for measured phases

    Intensity u_max cos^2((phi1 - phi2)/2); phase is the circular mean of the two
    phases, which is also the argument of the output amplitude.
    """
    diff = float(wrap_phase(p.phi2 - p.phi1))
    intensity = cfg.u_max * math.cos(0.5 * diff) ** 2
    phase = (p.phi1 + 0.5 * diff) % TWO_PI
    return OutputSignal(intensity=min(max(intensity, 0.0), cfg.u_max), phase=phase)


def emitted_amplitudes(phi1, phi2, u_max: float) -> np.ndarray:
    """Complex coherent amplitudes sqrt(u_max)/2 (e^{i phi1} + e^{i phi2}), vectorised"""
    return 0.5 * math.sqrt(u_max) * (np.exp(1j * np.asarray(phi1)) + np.exp(1j * np.asarray(phi2)))


def single_photon_transmission(phi1, phi2):
    """Probability that one photon leaves through the kept port of the local channel"""
    return np.cos(0.5 * (np.asarray(phi2) - np.asarray(phi1))) ** 2


def fock_transition_prob(m: int, n: int, phi1, phi2):
    """
    Probability that n photons entering the local channel leave m in the kept port

    Args:
        m: Surviving photons
        n: Incoming photons
        phi1, phi2: Phase modulations (scalars or arrays)

    Returns:
        binomial(n, m) tau^m (1 - tau)^(n - m) with tau = cos^2((phi2 - phi1)/2)
    """
    if n < 0 or m < 0 or m > n:
        raise ParameterError(f"need 0 <= m <= n, got m={m}, n={n}")
    tau = np.clip(single_photon_transmission(phi1, phi2), 0.0, 1.0)
    prob = binom.pmf(m, n, tau)
    return float(prob) if np.ndim(prob) == 0 else prob


def transition_rows(tau: np.ndarray, n_max: int) -> np.ndarray:
    """Lower-triangular t(m|n) for every tau, flattened to shape (len(tau), (n_max+1)^2)"""
    n = np.arange(n_max + 1)
    nn, mm = np.meshgrid(n, n, indexing="ij")
    probs = binom.pmf(mm[None, :, :], nn[None, :, :], tau[:, None, None])
    probs = np.where(mm[None] <= nn[None], probs, 0.0)
    return probs.reshape(tau.shape[0], -1)


def averaged_transition_matrix(
    n_max: int,
    phase_box: Tuple[Tuple[float, float], Tuple[float, float]],
    cfg: Optional[SourceConfig] = None,
    rel_tol: float = DEFAULT_TRANSITION_TOL,
) -> TransitionMatrix:
    """
    Average the local-channel law over phases uniform on a box

    Args:
        n_max: Largest incoming photon number
        phase_box: ((phi1_lo, phi1_hi), (phi2_lo, phi2_hi)); a zero-width interval
            means an exactly known phase
        cfg: Source the box belongs to (only used for its slice geometry checks)
        rel_tol: Cubature tolerance

    Returns:
        TransitionMatrix with probs[n, m] = t(m | n)
    """
    if n_max < 0:
        raise ParameterError("n_max must be >= 0")
    (a_lo, a_hi), (b_lo, b_hi) = phase_box
    if a_hi < a_lo or b_hi < b_lo:
        raise ParameterError(f"empty phase box {phase_box}")
    if cfg is not None and max(a_hi - a_lo, b_hi - b_lo) > cfg.slice_width + 1e-12:
        raise ParameterError("phase box is wider than one slice")
    size = n_max + 1

    if a_hi == a_lo and b_hi == b_lo:
        tau = np.atleast_1d(single_photon_transmission(a_lo, b_lo))
        return TransitionMatrix(probs=transition_rows(tau, n_max).reshape(size, size))
    if a_hi == a_lo or b_hi == b_lo:
        # one phase known exactly: average over the other only
        fixed_first = a_hi == a_lo
        lo, hi = (b_lo, b_hi) if fixed_first else (a_lo, a_hi)
        fixed = a_lo if fixed_first else b_lo

        def integrand_1d(pts):
            free = pts[:, 0]
            tau = single_photon_transmission(fixed, free) if fixed_first else single_photon_transmission(free, fixed)
            return transition_rows(tau, n_max)

        result = integrate_average(integrand_1d, [(lo, hi)], rel_tol=rel_tol)
        return TransitionMatrix(probs=np.asarray(result.value).reshape(size, size))

    def integrand(pts):
        return transition_rows(single_photon_transmission(pts[:, 0], pts[:, 1]), n_max)

    result = integrate_average(integrand, [(a_lo, a_hi), (b_lo, b_hi)], rel_tol=rel_tol)
    return TransitionMatrix(probs=np.asarray(result.value).reshape(size, size))


@lru_cache(maxsize=256)
def _slice_transition(offset: int, slices: int, n_max: int, rel_tol: float) -> TransitionMatrix:
    half = math.pi / slices
    shift = slice_center(1 + offset, slices)
    box = ((-half, half), (shift - half, shift + half))
    return averaged_transition_matrix(n_max, box, rel_tol=rel_tol)


def transition_for_slices(
    k1: int, k2: int, n_max: int, cfg: SourceConfig, rel_tol: float = DEFAULT_TRANSITION_TOL
) -> TransitionMatrix:
    """Averaged local-channel law for phases uniform in slices k1 and k2 (depends on k2 - k1 only)"""
    for k in (k1, k2):
        if not 1 <= k <= cfg.slices:
            raise ParameterError(f"slice index {k} outside 1..{cfg.slices}")
    return _slice_transition((k2 - k1) % cfg.slices, cfg.slices, n_max, rel_tol)


def bit_of_slice(k: int, slices: int) -> Optional[int]:
    """Key bit of the canonical pattern: slice 1 -> 0, slice M/2+1 -> 1, anything else -> None"""
    if not 1 <= k <= slices:
        raise ParameterError(f"slice index {k} outside 1..{slices}")
    if k == 1:
        return 0
    if k == slices // 2 + 1:
        return 1
    return None
