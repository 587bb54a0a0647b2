"""
Layered 50:50 beam-splitter network between the users and the detectors

Layer r pairs port i with port i + 2^r. Bit r of a port index (least significant
bit = layer 0) tells on which side of the pair the port sits, so composing the
layers gives the signed Hadamard-type matrix (-1)^(j.i) / sqrt(N_D).
"""

import math
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from models import TransferMatrix
from utils.errors import ParameterError


def bit_parity(j: int, i: int) -> int:
    """Parity of the bitwise dot product of two port indices"""
    return bin(j & i).count("1") & 1


def layer_sets(r: int, s: int) -> Tuple[List[int], List[int]]:
    """
    Split the 2^s ports of layer r into the upper members of each pair and the rest

    Args:
        r: Layer index, 0 <= r <= s - 1
        s: Number of layers

    Returns:
        (F_r, complement), both sorted, each of size 2^(s-1)
    """
    if s < 1 or not 0 <= r <= s - 1:
        raise ParameterError(f"layer r={r} outside 0..{s - 1}")
    block = 2 ** r
    upper = []
    for k in range(2 ** (s - r - 1)):
        start = k * 2 ** (r + 1)
        upper.extend(range(start, start + block))
    members = set(upper)
    lower = [idx for idx in range(2 ** s) if idx not in members]
    return upper, lower


def evolve_layer(amps, r: int, s: int) -> np.ndarray:
    """
    Propagate mode amplitudes through one layer of beam splitters

    Args:
        amps: Complex amplitudes, length 2^s
        r: Layer index
        s: Number of layers

    Returns:
        Amplitudes after the layer
    """
    amps = np.asarray(amps, dtype=complex)
    if amps.ndim != 1 or amps.shape[0] != 2 ** s:
        raise ParameterError(f"expected {2 ** s} amplitudes, got shape {amps.shape}")
    upper, lower = layer_sets(r, s)
    step = 2 ** r
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    out = np.zeros_like(amps)
    for i in upper:
        out[i] += amps[i] * inv_sqrt2
        out[i + step] += amps[i] * inv_sqrt2
    for j in lower:
        out[j - step] += amps[j] * inv_sqrt2
        out[j] -= amps[j] * inv_sqrt2
    return out


def propagate(amps, s: int) -> np.ndarray:
    """Run amplitudes through every layer, r = 0 .. s-1"""
    out = np.asarray(amps, dtype=complex)
    for r in range(s):
        out = evolve_layer(out, r, s)
    return out


@lru_cache(maxsize=None)
def _signed_entries(s: int) -> np.ndarray:
    n = 2 ** s
    idx = np.arange(n)
    parity = np.array([[bit_parity(j, i) for i in idx] for j in idx])
    entries = np.where(parity == 1, -1.0, 1.0) / math.sqrt(n)
    entries.setflags(write=False)
    return entries


def transfer_matrix(s: int) -> TransferMatrix:
    """Global evolution of the s-layer network, entry (j, i) = (-1)^(j.i) / sqrt(2^s)"""
    if s < 1:
        raise ParameterError(f"layer count s={s} must be >= 1")
    return TransferMatrix(entries=_signed_entries(s).copy())


def user_columns(s: int, n_users: int) -> np.ndarray:
    """Columns of the transfer matrix for the occupied input ports 0..N_U-1"""
    if not 1 <= n_users <= 2 ** s:
        raise ParameterError(f"n_users={n_users} outside 1..{2 ** s}")
    return _signed_entries(s)[:, :n_users]


def pad_inputs(user_amps, s: int) -> np.ndarray:
    """Place user amplitudes on ports 0..N_U-1, vacuum on the unused ports"""
    user_amps = np.asarray(user_amps, dtype=complex)
    n = 2 ** s
    if user_amps.shape[0] > n:
        raise ParameterError(f"{user_amps.shape[0]} users do not fit {n} ports")
    padded = np.zeros(n, dtype=complex)
    padded[: user_amps.shape[0]] = user_amps
    return padded
