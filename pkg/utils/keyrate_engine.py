"""
Key-rate assembly over slice combinations

The total rate averages max(0, R(combo)) over all M^(2N) combinations. R is
invariant under a global rotation of every slice index and under moving one
user's two slices by M/2 (a relabelling of that user's bit), so one normal form
per orbit of M 2^(N-1) combinations is evaluated and weighted by the orbit size.
"""

import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

from models import BranchCutParams, ChannelConfig, KeyRateReport, SliceCombination
from protocols import ProtocolFactory
from protocols.base_protocol import BaseProtocol, binary_entropy  # noqa: F401
from utils.errors import CKAError, NumericalToleranceError, ParameterError, UndefinedObservableError
from utils.storage import ResultCache

logger = logging.getLogger(__name__)

# Combinations handed to one worker task
CHUNK_SIZE = 256

KeepPredicate = Callable[[SliceCombination], bool]


def circular_distance(a: float, b: float, slices: int) -> float:
    """Distance on the M-cycle; half-integer positions allowed"""
    d = abs(a - b) % slices
    return min(d, slices - d)


def signed_difference(k1: int, k2: int, slices: int) -> int:
    """k2 - k1 reduced to (-M/2, M/2]"""
    d = (k2 - k1) % slices
    return d - slices if d > slices // 2 else d


def slice_mean(k1: int, k2: int, slices: int) -> float:
    """Circular mean position of a user's two slices"""
    return (k1 + 0.5 * signed_difference(k1, k2, slices)) % slices


def branch_cut_filter(combo: SliceCombination, params: BranchCutParams, slices: int) -> bool:
    """
    Keep (True) or cut (False) a combination

    Kept iff every user's two slices are within circular distance x and some
    choice of per-user bit flips puts every pair of slice means within y.
    """
    combo.check_range(slices)
    n_users = combo.n_users
    for i in range(n_users):
        if circular_distance(*combo.pair(i), slices) > params.x:
            return False
    means = [slice_mean(*combo.pair(i), slices) for i in range(n_users)]
    half = slices / 2
    for flips in itertools.product((0.0, half), repeat=n_users - 1):
        shifted = [means[0]] + [m + f for m, f in zip(means[1:], flips)]
        if all(
            circular_distance(shifted[a], shifted[b], slices) <= params.y
            for a, b in itertools.combinations(range(n_users), 2)
        ):
            return True
    return False


def orbit_size(n_users: int, slices: int) -> int:
    """Combinations sharing one normal form"""
    return slices * 2 ** (n_users - 1)


def normal_form_count(n_users: int, slices: int) -> int:
    return slices ** (2 * n_users) // orbit_size(n_users, slices)


def normal_forms(n_users: int, slices: int) -> Iterator[SliceCombination]:
    """
    One combination per symmetry orbit, in lexicographic order

    k_01 = 1 fixes the rotation, k_i1 <= M/2 for i >= 1 fixes the bit flips.
    """
    if slices < 2 or slices % 2:
        raise ParameterError(f"slice count M={slices} must be even")
    full = range(1, slices + 1)
    lower = range(1, slices // 2 + 1)
    axes = [range(1, 2), full] + [lower, full] * (n_users - 1)
    for k in itertools.product(*axes):
        yield SliceCombination(k=k)


def _make_protocol(
    name: str, rel_tol_click: float, rel_tol_transition: float, cache_dir: Optional[str], read_only: bool = False
) -> BaseProtocol:
    cache = ResultCache(cache_dir, read_only=read_only) if cache_dir else None
    return ProtocolFactory.get_protocol(
        name, rel_tol_click=rel_tol_click, rel_tol_transition=rel_tol_transition, cache=cache
    )


def keyrate_for_combination(
    combo: SliceCombination,
    cfg: ChannelConfig,
    n_bar: int,
    protocol: Optional[BaseProtocol] = None,
) -> float:
    """
    R(combo) of one slice combination, negative values passed through

    Raises:
        NumericalToleranceError: If a phase-box cubature does not converge
    """
    combo.check_range(cfg.slices)
    protocol = protocol or ProtocolFactory.get_protocol("passive")
    return protocol.combination_rate(cfg, combo, n_bar)


def _evaluate_chunk(
    protocol_name: str,
    cfg: ChannelConfig,
    combos: Sequence[SliceCombination],
    n_bar: int,
    rel_tol_click: float,
    rel_tol_transition: float,
    cache_dir: Optional[str] = None,
) -> List[Tuple[float, Optional[str]]]:
    """Top-level worker: rate or failure message of every combination, disk cache read-only"""
    protocol = _make_protocol(protocol_name, rel_tol_click, rel_tol_transition, cache_dir, read_only=True)
    return [_evaluate_one(protocol, cfg, combo, n_bar) for combo in combos]


def _evaluate_one(protocol: BaseProtocol, cfg: ChannelConfig, combo: SliceCombination, n_bar: int):
    try:
        return protocol.combination_rate(cfg, combo, n_bar), None
    except (NumericalToleranceError, UndefinedObservableError) as e:
        return 0.0, f"{combo.k}: {e}"


def _chunks(items: Sequence, size: int) -> Iterator[Sequence]:
    for start in range(0, len(items), size):
        yield items[start : start + size]


def total_keyrate(
    cfg: ChannelConfig,
    params: BranchCutParams,
    n_bar: int,
    workers: int = 1,
    keep: Optional[KeepPredicate] = None,
    rel_tol_click: float = 1e-4,
    rel_tol_transition: float = 1e-6,
    cache_dir: Optional[str] = None,
    record_timing: bool = True,
) -> KeyRateReport:
    """
    Passive key rate of one channel configuration

    Args:
        cfg: Channel configuration
        params: Branch-cut limits (ignored when keep is given)
        n_bar: Photon cutoff of the phase-error bound
        workers: Worker processes for the combination sum
        keep: Replacement keep-predicate applied to the normal forms
        rel_tol_click: Cubature tolerance of the KG observables
        rel_tol_transition: Cubature tolerance of the local-channel laws
        cache_dir: Directory of the on-disk result cache, read-only inside workers
        record_timing: Store the wall time in the report

    Returns:
        KeyRateReport; failed combinations contribute 0 and mark the status "partial"
    """
    try:
        params.check_range(cfg.slices)
    except ValueError as e:
        raise ParameterError(str(e))
    started = time.perf_counter()
    n_users = cfg.n_users
    slices = cfg.slices
    weight = orbit_size(n_users, slices) / slices ** (2 * n_users)
    keep = keep or (lambda combo: branch_cut_filter(combo, params, slices))

    kept: List[SliceCombination] = []
    cut = 0
    for combo in normal_forms(n_users, slices):
        if keep(combo):
            kept.append(combo)
        else:
            cut += 1
    logger.info("loss %s dB: %d combinations kept, %d cut", cfg.loss_db, len(kept), cut)

    if workers > 1 and len(kept) > CHUNK_SIZE:
        if cache_dir:
            # workers open the cache read-only
            try:
                _make_protocol("passive", rel_tol_click, rel_tol_transition, cache_dir).warm_cache(cfg, n_bar)
                logger.debug("disk cache %s warmed for %d workers", cache_dir, workers)
            except CKAError as e:
                logger.warning("could not warm disk cache %s: %s", cache_dir, e)
        chunks = list(_chunks(kept, CHUNK_SIZE))
        with ProcessPoolExecutor(max_workers=workers) as executor:
            chunk_results = executor.map(
                _evaluate_chunk,
                itertools.repeat("passive"),
                itertools.repeat(cfg),
                chunks,
                itertools.repeat(n_bar),
                itertools.repeat(rel_tol_click),
                itertools.repeat(rel_tol_transition),
                itertools.repeat(cache_dir),
            )
            outcomes = [item for chunk in chunk_results for item in chunk]
    else:
        protocol = _make_protocol("passive", rel_tol_click, rel_tol_transition, cache_dir)
        outcomes = [_evaluate_one(protocol, cfg, combo, n_bar) for combo in kept]

    failures = [message for _, message in outcomes if message is not None]
    for message in failures:
        logger.warning("combination failed: %s", message)
    # outcomes follow the lexicographic order of the normal forms
    rate = math.fsum(max(0.0, r) for r, _ in outcomes) * weight

    canonical = SliceCombination.canonical(n_users)
    diagnostics = _make_protocol("passive", rel_tol_click, rel_tol_transition, cache_dir)
    try:
        terms = diagnostics.detector_terms(cfg, canonical, n_bar)
    except CKAError as e:
        logger.warning("canonical diagnostics failed: %s", e)
        terms = []

    return KeyRateReport(
        loss_db=float(max(cfg.loss_db)),
        rate_passive=rate,
        rate_active_limit=active_limit_keyrate(cfg, n_bar),
        pr_omega=[t.pr_omega for t in terms],
        phase_error=[t.phase_error for t in terms],
        qber_max=[t.qber_max for t in terms],
        combinations_evaluated=len(kept),
        combinations_cut=cut,
        failed_combinations=failures,
        status="partial" if failures else "ok",
        wall_time_s=time.perf_counter() - started if record_timing else None,
    )


def active_limit_keyrate(cfg: ChannelConfig, n_bar: int) -> float:
    """Rate with exactly prepared signals, no local loss and no sifting, floored at 0"""
    protocol = ProtocolFactory.get_protocol("active_limit")
    return max(0.0, protocol.combination_rate(cfg, SliceCombination.canonical(cfg.n_users), n_bar))
