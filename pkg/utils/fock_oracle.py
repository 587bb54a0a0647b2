"""
Brute-force Fock-space oracles

Slow, dimension-explicit reference computations used by the validate command and
the tests: a two-mode interferometer built from the matrix exponential of the
beam-splitter generator, and a multimode permanent expansion for single-click
yields.
"""

import itertools
import math
from typing import Iterator, List, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

from utils.errors import ParameterError


def _ladder(dim: int) -> np.ndarray:
    """Annihilation operator truncated to dim Fock levels"""
    return np.diag(np.sqrt(np.arange(1, dim)), k=1)


def _two_mode_unitary(theta: float, phi1: float, phi2: float, dim: int) -> np.ndarray:
    a = np.kron(_ladder(dim), np.eye(dim))
    b = np.kron(np.eye(dim), _ladder(dim))
    generator = theta * (a.conj().T @ b - a @ b.conj().T)
    split = expm(generator)
    merge = expm(-generator)
    levels = np.arange(dim)
    phases = np.exp(1j * (phi1 * np.repeat(levels, dim) + phi2 * np.tile(levels, dim)))
    return merge @ np.diag(phases) @ split


def interferometer_transition(m: int, n: int, phi1: float, phi2: float) -> float:
    """
    Probability of m photons at the kept port of a phase-modulated Mach-Zehnder

    The n photons enter one port with vacuum in the other, pass a 50:50 splitter,
    pick up phases phi1 and phi2 on the two arms and recombine on the inverse
    splitter.
    """
    if n < 0 or not 0 <= m <= n:
        raise ParameterError(f"need 0 <= m <= n, got m={m}, n={n}")
    dim = n + 1
    unitary = _two_mode_unitary(math.pi / 4, phi1, phi2, dim)
    state_in = np.zeros(dim * dim, dtype=complex)
    state_in[n * dim] = 1.0
    state_out = unitary @ state_in
    return float(abs(state_out[m * dim + (n - m)]) ** 2)


def permanent(matrix: np.ndarray) -> complex:
    """Permanent by Ryser's inclusion-exclusion over column subsets"""
    size = matrix.shape[0]
    if size == 0:
        return 1.0
    total = 0j
    for r in range(1, size + 1):
        for cols in itertools.combinations(range(size), r):
            total += (-1) ** r * np.prod(matrix[:, list(cols)].sum(axis=1))
    return (-1) ** size * total


def _occupations(total: int, modes: int) -> Iterator[Tuple[int, ...]]:
    """Every way of placing total photons into modes"""
    for bars in itertools.combinations(range(total + modes - 1), modes - 1):
        edges = (-1,) + bars + (total + modes - 1,)
        yield tuple(edges[k + 1] - edges[k] - 1 for k in range(modes))


def lossy_network_unitary(network: np.ndarray, eta: Sequence[float]) -> np.ndarray:
    """
    Single-photon unitary of per-port loss followed by the network

    Port i couples to environment mode N_D + i with transmittance eta_i (unit
    transmittance for ports without a user).
    """
    n_det = network.shape[0]
    eta = list(eta) + [1.0] * (n_det - len(eta))
    loss = np.zeros((2 * n_det, 2 * n_det))
    for port, t in enumerate(eta):
        keep, leak = math.sqrt(t), math.sqrt(1.0 - t)
        env = n_det + port
        loss[port, port] = keep
        loss[env, port] = leak
        loss[port, env] = -leak
        loss[env, env] = keep
    full = np.eye(2 * n_det)
    full[:n_det, :n_det] = network
    return full @ loss


def output_distribution(unitary: np.ndarray, n_in: Sequence[int]) -> List[Tuple[Tuple[int, ...], float]]:
    """Probability of every output occupation for a Fock input, via permanents"""
    modes = unitary.shape[0]
    occupied = list(n_in) + [0] * (modes - len(n_in))
    cols = [mode for mode, count in enumerate(occupied) for _ in range(count)]
    total = len(cols)
    norm_in = np.prod([math.factorial(c) for c in occupied])
    result = []
    for pattern in _occupations(total, modes):
        rows = [mode for mode, count in enumerate(pattern) for _ in range(count)]
        sub = unitary[np.ix_(rows, cols)] if total else np.zeros((0, 0))
        norm = norm_in * np.prod([math.factorial(c) for c in pattern])
        result.append((pattern, float(abs(permanent(sub)) ** 2 / norm)))
    return result


def brute_force_yield(n_in: Sequence[int], detector: int, network: np.ndarray, eta: Sequence[float], p_dark: float) -> float:
    """
    Single-click probability at one detector for Fock inputs

    Args:
        n_in: Photon numbers on the user ports
        detector: Index of the clicking detector
        network: N_D x N_D transfer matrix
        eta: Per-user transmittance
        p_dark: Dark-count probability per detector

    Returns:
        Sum over output patterns of the probability that only this detector clicks
    """
    n_det = network.shape[0]
    unitary = lossy_network_unitary(network, eta)
    quiet = (1.0 - p_dark) ** (n_det - 1)
    total = 0.0
    for pattern, prob in output_distribution(unitary, n_in):
        lit = [mode for mode in range(n_det) if pattern[mode] > 0]
        if not lit:
            total += prob * p_dark * quiet
        elif lit == [detector]:
            total += prob * quiet
    return total
