"""
Validate command - run the oracle checks and report each deviation
"""

import itertools
import logging
import math
from typing import Callable, List

import numpy as np

from models import CheckResult, ChannelConfig, RunConfig, SliceCombination, YieldTensor
from utils import passive_source
from utils.bs_network import propagate, transfer_matrix
from utils.channel_model import fock_yields, kg_observables, pr_omega_from_observables, qber_from_observables
from utils.errors import ValidationFailure
from utils.fock_oracle import brute_force_yield, interferometer_transition
from utils.mc_oracle import simulate_rounds
from utils.phase_error import correct_yields, correct_yields_by_cubature

logger = logging.getLogger(__name__)

MC_LOSS_GRID = (0.0, 10.0, 20.0)
MAX_ORACLE_LAYERS = 4
FOCK_CHECK_MAX_N = 6
FOCK_CHECK_PAIRS = 100
YIELD_CHECK_MAX_TOTAL = 3


def check_network(config: RunConfig) -> CheckResult:
    """Orthogonality of the transfer matrix and agreement with layer-by-layer propagation"""
    worst = 0.0
    for s in range(1, min(config.layers, MAX_ORACLE_LAYERS) + 1):
        u = transfer_matrix(s).entries
        worst = max(worst, float(np.max(np.abs(u @ u.T - np.eye(2 ** s)))))
        for i in range(2 ** s):
            unit = np.zeros(2 ** s)
            unit[i] = 1.0
            worst = max(worst, float(np.max(np.abs(propagate(unit, s) - u[:, i]))))
    return CheckResult(name="network", deviation=worst, threshold=1e-12)


def check_fock_transition(config: RunConfig) -> CheckResult:
    """Two-mode Fock evolution against the binomial local-channel law"""
    rng = np.random.default_rng(config.seed)
    worst = 0.0
    for phi1, phi2 in rng.uniform(0.0, 2.0 * math.pi, size=(FOCK_CHECK_PAIRS, 2)):
        for n in range(FOCK_CHECK_MAX_N + 1):
            for m in range(n + 1):
                exact = interferometer_transition(m, n, phi1, phi2)
                worst = max(worst, abs(exact - passive_source.fock_transition_prob(m, n, phi1, phi2)))
    return CheckResult(name="fock_transition", deviation=worst, threshold=1e-10)


def check_transition_normalisation(config: RunConfig) -> CheckResult:
    """Every averaged local-channel law is a proper distribution over m"""
    source = config.channel_config(0.0).source
    worst = 0.0
    for k2 in range(1, config.slices + 1):
        matrix = passive_source.transition_for_slices(1, k2, config.n_bar, source, config.rel_tol_transition)
        worst = max(worst, float(np.max(np.abs(matrix.row_sums() - 1.0))))
    return CheckResult(name="transition_normalisation", deviation=worst, threshold=1e-9)


def check_factorised_correction(config: RunConfig) -> CheckResult:
    """Factorised yield correction against direct 4-D cubature for two users"""
    n_bar = 2
    cfg = ChannelConfig.uniform(0.0, n_users=2, s=1, u_max=config.u_max, slices=config.slices)
    rng = np.random.default_rng(config.seed)
    raw = YieldTensor(values=rng.uniform(0.0, 1.0, size=(2, n_bar + 1, n_bar + 1)), n_bar=n_bar)
    combo = SliceCombination(k=(1, 2, 1, config.slices))
    transitions = [
        passive_source.transition_for_slices(k1, k2, n_bar, cfg.source, config.rel_tol_transition)
        for k1, k2 in (combo.pair(0), combo.pair(1))
    ]
    fast = correct_yields(raw, transitions).values
    direct = correct_yields_by_cubature(raw, combo, config.slices, rel_tol=1e-7).values
    deviation = float(np.max(np.abs(fast - direct)) / np.max(np.abs(direct)))
    return CheckResult(name="factorised_correction", deviation=deviation, threshold=1e-4)


def check_fock_yields(config: RunConfig) -> CheckResult:
    """Closed-form Fock yields against the multimode permanent expansion"""
    layers = min(config.layers, 2)
    users = min(config.users, 2 ** layers)
    cfg = ChannelConfig.uniform(3.0, n_users=users, s=layers, u_max=config.u_max, slices=config.slices, p_dark=config.p_dark)
    network = transfer_matrix(layers).entries
    worst = 0.0
    for n_vec in itertools.product(range(YIELD_CHECK_MAX_TOTAL + 1), repeat=users):
        if sum(n_vec) > YIELD_CHECK_MAX_TOTAL:
            continue
        for j in range(cfg.n_detectors):
            oracle = brute_force_yield(n_vec, j, network, cfg.eta, cfg.p_dark)
            worst = max(worst, abs(fock_yields(n_vec, j, cfg) - oracle))
    return CheckResult(name="fock_yields", deviation=worst, threshold=1e-12)


def _z_score(estimate: float, expected: float, samples: int, tolerance: float) -> float:
    """|estimate - expected| in units of the binomial standard error, after the cubature tolerance"""
    if samples == 0:
        return 0.0
    p = min(max(expected, 1.0 / samples), 1.0 - 1.0 / samples)
    spread = math.sqrt(p * (1.0 - p) / samples)
    return max(abs(estimate - expected) - tolerance, 0.0) / spread


def check_monte_carlo(config: RunConfig) -> CheckResult:
    """Simulated KG rounds against the analytic observables, canonical combination"""
    combo = SliceCombination.canonical(config.users)
    worst = 0.0
    where = ""
    for loss in MC_LOSS_GRID:
        cfg = config.channel_config(loss)
        obs = kg_observables(cfg, combo, rel_tol=config.rel_tol_click)
        stats = simulate_rounds(cfg, combo, config.mc_trials, config.seed, workers=config.workers)
        for j in range(cfg.n_detectors):
            pr = pr_omega_from_observables(obs, j)
            z = _z_score(stats.kg_click_counts[j] / stats.trials, pr, stats.trials, config.rel_tol_click * pr)
            if z > worst:
                worst, where = z, f"(Pr(Omega_{j}|KG) at {loss:g} dB)"
            clicks = stats.kg_click_counts[j]
            if pr <= 0.0 or clicks == 0:
                continue
            for i in range(1, cfg.n_users):
                q = qber_from_observables(obs, j, i)
                z = _z_score(stats.qber(j, i), q, clicks, config.rel_tol_click)
                if z > worst:
                    worst, where = z, f"(QBER_0{i} at detector {j}, {loss:g} dB)"
    return CheckResult(name="monte_carlo", deviation=worst, threshold=3.0, detail=where)


CHECKS: List[Callable[[RunConfig], CheckResult]] = [
    check_network,
    check_fock_transition,
    check_transition_normalisation,
    check_factorised_correction,
    check_fock_yields,
    check_monte_carlo,
]


def run_validate_command(config: RunConfig) -> List[CheckResult]:
    """
    Run every check and print one line per check

    Raises:
        ValidationFailure: If any check fails
    """
    results = []
    for check in CHECKS:
        logger.info("running %s", check.__name__)
        result = check(config)
        print(result.describe())
        results.append(result)
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise ValidationFailure(f"checks failed: {', '.join(failed)}")
    return results
