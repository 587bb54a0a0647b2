"""
Base protocol class using Strategy pattern
A protocol decides how KG observables and local-channel laws are obtained;
the key-rate bracket built from them is shared
"""

import math
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from models import ChannelConfig, DetectorTerm, KGObservables, SliceCombination, TransitionMatrix, YieldTensor
from utils.channel_model import pr_omega_from_observables, qber_from_observables, yield_tensor
from utils.errors import ParameterError
from utils.phase_error import coeff_table, correct_yields, phase_error_rate
from utils.storage import ResultCache, content_key


def binary_entropy(q: float) -> float:
    """h(q) = -q log2 q - (1-q) log2(1-q), with h(0) = h(1) = 0"""
    if not 0.0 <= q <= 1.0:
        raise ParameterError(f"binary entropy needs q in [0, 1], got {q}")
    if q == 0.0 or q == 1.0:
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


class BaseProtocol(ABC):
    """Abstract base class for the signal models the key-rate engine can use"""

    def __init__(
        self,
        rel_tol_click: float = 1e-4,
        rel_tol_transition: float = 1e-6,
        cache: Optional[ResultCache] = None,
    ):
        self.name = "base"
        self.description = "Base protocol"
        self.rel_tol_click = rel_tol_click
        self.rel_tol_transition = rel_tol_transition
        self.cache = cache
        self._memo: Dict[str, Any] = {}

    def _cached(self, kind: str, key: Dict[str, Any], compute: Callable[[], np.ndarray]) -> np.ndarray:
        """Array from the in-process memo, then the disk cache, then compute"""
        memo_key = content_key(kind, key)
        if memo_key not in self._memo:
            if self.cache is None:
                value = compute()
            else:
                value = np.asarray(self.cache.get_or_compute(kind, key, lambda: compute().tolist()))
            self._memo[memo_key] = value
        return self._memo[memo_key]

    @abstractmethod
    def kg_observables(self, cfg: ChannelConfig, combo: SliceCombination) -> KGObservables:
        """Click probabilities of every KG bit pattern of the combination"""
        pass

    @abstractmethod
    def transitions(self, cfg: ChannelConfig, combo: SliceCombination, n_bar: int) -> List[TransitionMatrix]:
        """Local-channel law of every user for the combination"""
        pass

    def raw_yields(self, cfg: ChannelConfig, n_bar: int) -> YieldTensor:
        """Fock yields of the channel, computed once per configuration"""
        key = {
            "loss_db": cfg.loss_db,
            "p_dark": cfg.p_dark,
            "s": cfg.topology.s,
            "n_users": cfg.n_users,
            "n_bar": n_bar,
        }
        values = self._cached("yields", key, lambda: yield_tensor(cfg, n_bar).values)
        return YieldTensor(values=values, n_bar=n_bar)

    def warm_cache(self, cfg: ChannelConfig, n_bar: int) -> None:
        """Compute every combination-independent array of the configuration"""
        self.raw_yields(cfg, n_bar)

    def detector_terms(self, cfg: ChannelConfig, combo: SliceCombination, n_bar: int) -> List[DetectorTerm]:
        """
        Per-detector ingredients of R(combo)

        Returns:
            One DetectorTerm per detector; a detector that never fires gets an
            uninformative term (error rates 1/2) with zero weight
        """
        obs = self.kg_observables(cfg, combo)
        corrected = correct_yields(self.raw_yields(cfg, n_bar), self.transitions(cfg, combo, n_bar))
        coeffs = coeff_table([math.sqrt(cfg.source.u_max)] * cfg.n_users, n_bar)

        terms = []
        for j in range(cfg.n_detectors):
            pr = pr_omega_from_observables(obs, j)
            if pr <= 0.0:
                terms.append(DetectorTerm(detector=j, pr_omega=0.0, phase_error=0.5, qber_max=0.5, bracket=-1.0))
                continue
            e_phase = phase_error_rate(j, corrected, coeffs, pr)
            qbers = [qber_from_observables(obs, j, i) for i in range(1, cfg.n_users)]
            worst = max((binary_entropy(q) for q in qbers), default=0.0)
            # an upper bound above 1/2 carries no information
            bracket = 1.0 - binary_entropy(min(e_phase, 0.5)) - worst
            qber_max = max(qbers, key=binary_entropy) if qbers else 0.0
            terms.append(DetectorTerm(detector=j, pr_omega=pr, phase_error=e_phase, qber_max=qber_max, bracket=bracket))
        return terms

    def combination_rate(self, cfg: ChannelConfig, combo: SliceCombination, n_bar: int) -> float:
        """sum_j Pr(Omega_j|KG) [1 - h(Q_Z^j) - max_i h(Q_0i^j)], negative values passed through"""
        return math.fsum(t.pr_omega * t.bracket for t in self.detector_terms(cfg, combo, n_bar))
