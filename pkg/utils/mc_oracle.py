"""
Monte Carlo simulation of protocol rounds

Independent of the cubature pipeline: phases are sampled, signals interfere on
the network and every detector's click is drawn as a Bernoulli variable. Trials
are processed in fixed-size chunks, each with its own Philox stream keyed by
(seed, chunk index), so the counts do not depend on how chunks are distributed.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, Optional

import numpy as np

from models import ChannelConfig, SliceCombination, TrialStats
from utils.bs_network import user_columns
from utils.channel_model import parity_table
from utils.errors import ParameterError
from utils.passive_source import TWO_PI, emitted_amplitudes, slice_indices, slice_interval

logger = logging.getLogger(__name__)

CHUNK_TRIALS = 50_000


def chunk_generator(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def _sample_clicks(rng: np.random.Generator, betas: np.ndarray, p_dark: float) -> np.ndarray:
    """Boolean click matrix (trials, N_D)"""
    p_click = 1.0 - (1.0 - p_dark) * np.exp(-np.abs(betas) ** 2)
    return rng.random(betas.shape) < p_click


def _conditional_phases(rng: np.random.Generator, combo: SliceCombination, slices: int, size: int):
    """Phases uniform in the combination's boxes with an independent random bit per user"""
    n_users = combo.n_users
    lower = np.array([slice_interval(k, slices)[0] for k in combo.k])
    bits = rng.integers(0, 2, size=(size, n_users))
    phases = lower + rng.random((size, 2 * n_users)) * (TWO_PI / slices)
    # bit 1 moves both of a user's slices by M/2
    phases = phases + np.repeat(bits, 2, axis=1) * np.pi
    return phases, bits


def _canonical_bits(phases: np.ndarray, slices: int):
    """Bits of rounds whose slices match the canonical pattern, -1 elsewhere"""
    k = slice_indices(phases, slices)
    first, second = k[:, 0::2], k[:, 1::2]
    top = (first == 1) & (second == 1)
    bottom = (first == slices // 2 + 1) & (second == slices // 2 + 1)
    bits = np.where(top, 0, np.where(bottom, 1, -1))
    return bits, np.all(bits >= 0, axis=1)


def _run_chunk(cfg: ChannelConfig, combo: Optional[SliceCombination], size: int, seed: int, chunk: int) -> Dict[str, np.ndarray]:
    rng = chunk_generator(seed, chunk)
    n_users, n_det, slices = cfg.n_users, cfg.n_detectors, cfg.slices
    if combo is None:
        phases = rng.uniform(0.0, TWO_PI, size=(size, 2 * n_users))
        bits, accepted = _canonical_bits(phases, slices)
    else:
        phases, bits = _conditional_phases(rng, combo, slices, size)
        accepted = np.ones(size, dtype=bool)

    amps = emitted_amplitudes(phases[:, 0::2], phases[:, 1::2], cfg.source.u_max)
    amps = amps * np.sqrt(cfg.eta) * np.exp(1j * cfg.offsets)
    betas = amps @ user_columns(cfg.topology.s, n_users).T
    clicks = _sample_clicks(rng, betas, cfg.p_dark)
    single = clicks.sum(axis=1) == 1
    detector = np.argmax(clicks, axis=1)

    parity = parity_table(n_det, n_users)
    kg_clicks = np.zeros(n_det, dtype=np.int64)
    disagreements = np.zeros((n_det, n_users), dtype=np.int64)
    for j in range(n_det):
        hit = single & accepted & (detector == j)
        kg_clicks[j] = np.count_nonzero(hit)
        b = bits[hit]
        for i in range(1, n_users):
            disagreements[j, i] = np.count_nonzero(b[:, 0] != (b[:, i] ^ parity[j, i]))
    return {
        "single": np.bincount(detector[single], minlength=n_det),
        "accepted": np.count_nonzero(accepted),
        "kg_clicks": kg_clicks,
        "disagreements": disagreements,
    }


def simulate_rounds(
    cfg: ChannelConfig,
    combo_filter: Optional[SliceCombination],
    trials: int,
    seed: int,
    workers: int = 1,
) -> TrialStats:
    """
    Simulate protocol rounds and count single clicks, KG rounds and bit disagreements

    Args:
        cfg: Channel configuration
        combo_filter: Sample inside this combination's boxes (every trial is a KG
            round), or None to sample all phases and keep canonical-pattern rounds
        trials: Number of rounds
        seed: Root seed
        workers: Worker processes

    Returns:
        TrialStats with disagreement_counts[j][i] counting X_0 != (-1)^(j.i) X_i
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if combo_filter is not None:
        combo_filter.check_range(cfg.slices)
        if combo_filter.n_users != cfg.n_users:
            raise ParameterError("combination does not match the number of users")
    sizes = [min(CHUNK_TRIALS, trials - start) for start in range(0, trials, CHUNK_TRIALS)]
    args = [(cfg, combo_filter, size, seed, chunk) for chunk, size in enumerate(sizes)]

    if workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(_run_chunk, *zip(*args)))
    else:
        results = [_run_chunk(*a) for a in args]

    n_det = cfg.n_detectors
    single = np.zeros(n_det, dtype=np.int64)
    kg_clicks = np.zeros(n_det, dtype=np.int64)
    disagreements = np.zeros((n_det, cfg.n_users), dtype=np.int64)
    accepted = 0
    for r in results:
        single += r["single"]
        kg_clicks += r["kg_clicks"]
        disagreements += r["disagreements"]
        accepted += int(r["accepted"])
    logger.debug("simulated %d rounds in %d chunks, %d KG rounds", trials, len(sizes), accepted)
    return TrialStats(
        trials=trials,
        seed=seed,
        single_click_counts=single.tolist(),
        kg_accepted=accepted,
        kg_click_counts=kg_clicks.tolist(),
        disagreement_counts=disagreements.tolist(),
    )
