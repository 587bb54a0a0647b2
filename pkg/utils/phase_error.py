"""
Phase error rate of the passive protocol

Yields are first corrected for the photons the users' own phase-dependent local
channels remove, then combined with the coherent-state expansion coefficients of
the equivalent perfectly prepared source into the phase error bound.
"""

import itertools
import logging
import math
from functools import reduce
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from models import CoeffTable, SliceCombination, TransitionMatrix, YieldTensor
from utils.channel_model import apply_per_user_channels
from utils.errors import ParameterError, UndefinedObservableError
from utils.passive_source import single_photon_transmission, slice_interval, transition_rows
from utils.quadrature import integrate_average

logger = logging.getLogger(__name__)

# Per-user series are cut once the parity-allowed terms fall below this fraction of their peak
SERIES_CUTOFF = 1e-18


def correct_yields(raw: YieldTensor, transitions: Sequence[TransitionMatrix]) -> YieldTensor:
    """
    Y^Z[n] = sum_{m <= n} prod_i t_i(m_i | n_i) Y[m]

    Args:
        raw: Yield tensor indexed by the photons entering the network
        transitions: One local-channel law per user, covering n up to raw.n_bar

    Returns:
        Yield tensor indexed by the photons of the equivalent ideal source

    Raises:
        ParameterError: If the number of users or the photon cutoffs do not match
    """
    if len(transitions) != raw.n_users:
        raise ParameterError(f"{len(transitions)} transition matrices for {raw.n_users} users")
    size = raw.n_bar + 1
    if any(t.n_max < raw.n_bar for t in transitions):
        raise ParameterError(f"transition matrices must cover n up to {raw.n_bar}")
    matrices = [t.probs[:size, :size] for t in transitions]
    corrected = apply_per_user_channels(raw.values, matrices, first_axis=1)
    return YieldTensor(values=np.clip(corrected, 0.0, 1.0), n_bar=raw.n_bar)


def correct_yields_by_cubature(
    raw: YieldTensor, combo: SliceCombination, slices: int, rel_tol: float = 1e-6, max_cells: int = 20000
) -> YieldTensor:
    """
    Reference for correct_yields: the full 2N-dimensional phase average done in one cubature

    Exponentially slower than the factorised form; used by validation only.
    """
    if combo.n_users != raw.n_users:
        raise ParameterError("combination does not match the yield tensor")
    n_bar = raw.n_bar
    size = n_bar + 1
    n_users = raw.n_users

    def integrand(points: np.ndarray) -> np.ndarray:
        count = points.shape[0]
        tau = single_photon_transmission(points[:, 0::2], points[:, 1::2])
        arr = np.broadcast_to(raw.values, (count,) + raw.values.shape)
        for i in range(n_users):
            laws = transition_rows(tau[:, i], n_bar).reshape(count, size, size)
            arr = np.moveaxis(arr, 2 + i, -1)
            arr = np.einsum("pnm,p...m->p...n", laws, arr)
            arr = np.moveaxis(arr, -1, 2 + i)
        return arr.reshape(count, -1)

    box = [slice_interval(k, slices) for k in combo.k]
    result = integrate_average(integrand, box, rel_tol=rel_tol, max_cells=max_cells)
    values = np.asarray(result.value).reshape(raw.values.shape)
    return YieldTensor(values=np.clip(values, 0.0, 1.0), n_bar=n_bar)


def coeff_c(n: int, l: int, alpha: float) -> float:
    """e^{-alpha^2/2} alpha^n / sqrt(n!) when n + l is even, otherwise 0"""
    if n < 0 or alpha < 0:
        raise ParameterError("need n >= 0 and alpha >= 0")
    if (n + l) % 2:
        return 0.0
    if alpha == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(-0.5 * alpha * alpha + n * math.log(alpha) - 0.5 * math.lgamma(n + 1))


def _series(n_max: int, l: int, alpha: float) -> np.ndarray:
    n = np.arange(n_max + 1)
    if alpha == 0.0:
        values = np.where(n == 0, 1.0, 0.0)
    else:
        values = np.exp(-0.5 * alpha * alpha + n * math.log(alpha) - 0.5 * gammaln(n + 1))
    return np.where((n + l) % 2 == 0, values, 0.0)


def coeff_table(alphas: Sequence[float], n_max: int) -> CoeffTable:
    """c[i, n, l] for every user, n <= n_max and l in {0, 1}"""
    alphas = np.asarray(alphas, dtype=float)
    if np.any(alphas < 0):
        raise ParameterError("amplitudes must be >= 0")
    table = np.stack([np.stack([_series(n_max, l, float(a)) for l in (0, 1)], axis=-1) for a in alphas])
    return CoeffTable(c=table, alphas=alphas)


def v_set(n: int) -> List[Tuple[int, ...]]:
    """Binary vectors of length n with even Hamming weight, in lexicographic order"""
    if n < 1:
        raise ParameterError("need at least one user")
    return [v for v in itertools.product((0, 1), repeat=n) if sum(v) % 2 == 0]


def _series_length(alpha: float, min_length: int) -> int:
    """Smallest cutoff >= min_length beyond which the series is negligible and contracting"""
    if alpha == 0.0:
        return min_length
    n = max(min_length, int(math.ceil(alpha * alpha)) + 2)
    peak = max(coeff_c(k, k % 2, alpha) for k in range(n + 1))
    while True:
        ratio = alpha * alpha / math.sqrt((n + 1) * (n + 2))
        if ratio < 0.5 and coeff_c(n, n % 2, alpha) < SERIES_CUTOFF * peak:
            return n
        n += 1


def _remainder(alpha: float, l: int, last: int) -> float:
    """Ratio-test bound on sum_{n > last, n + l even} c_n"""
    if alpha == 0.0:
        return 0.0
    first = last + 1 if (last + 1 + l) % 2 == 0 else last + 2
    ratio = alpha * alpha / math.sqrt((first + 1) * (first + 2))
    return coeff_c(first, l, alpha) / (1.0 - ratio)


def delta_tail(v: Sequence[int], n_bar: int, alphas: Sequence[float]) -> float:
    """
    Sum of prod_i c_{i, n_i}^{(v_i)} over every photon vector with total above n_bar

    Built shell by shell from the convolution of the per-user series, plus a
    bound on the part of the series beyond the truncation point.
    """
    if n_bar < 0:
        raise ParameterError("n_bar must be >= 0")
    if len(v) != len(alphas):
        raise ParameterError("v and alphas must have one entry per user")
    alphas = [float(a) for a in alphas]
    length = max(_series_length(a, n_bar + 2) for a in alphas)
    series = [_series(length, l, a) for l, a in zip(v, alphas)]
    shells = reduce(np.convolve, series)
    tail = math.fsum(shells[n_bar + 1 :])

    full_sums = [math.fsum(s) for s in series]
    remainders = [_remainder(a, l, length) for l, a in zip(v, alphas)]
    missing = 0.0
    for i, r in enumerate(remainders):
        others = math.prod(full_sums[k] + remainders[k] for k in range(len(series)) if k != i)
        missing += r * others
    return max(tail + missing, 0.0)


def phase_error_rate(j: int, corrected: YieldTensor, coeffs: CoeffTable, pr_kg: float) -> float:
    """
    Phase error bound for detector j

    Q = (1/pr_kg) sum_v ( sum_{|n| <= n_bar} prod_i c_{i,n_i}^{(v_i)} sqrt(Y^j[n]) + Delta_v )^2,
    clamped to [0, 1].

    Raises:
        UndefinedObservableError: If pr_kg is zero
    """
    if pr_kg <= 0.0:
        raise UndefinedObservableError(f"Pr(Omega_{j}|KG) is zero, phase error undefined")
    if not 0 <= j < corrected.n_detectors:
        raise ParameterError(f"detector {j} outside 0..{corrected.n_detectors - 1}")
    n_bar = corrected.n_bar
    n_users = corrected.n_users
    if coeffs.c.shape[0] != n_users or coeffs.c.shape[1] < n_bar + 1:
        raise ParameterError("coefficient table does not cover the yield tensor")

    grid = np.arange(n_bar + 1)
    inside = reduce(np.add.outer, [grid] * n_users) <= n_bar
    root_yields = np.sqrt(np.clip(corrected.values[j], 0.0, None))

    total = 0.0
    for v in v_set(n_users):
        weights = reduce(np.multiply.outer, [coeffs.c[i, : n_bar + 1, v[i]] for i in range(n_users)])
        head = math.fsum((weights * root_yields)[inside])
        total += (head + delta_tail(v, n_bar, coeffs.alphas)) ** 2
    value = total / pr_kg
    if value > 1.0:
        logger.debug("phase error %.4g clamped to 1 at detector %d", value, j)
    return min(max(value, 0.0), 1.0)
