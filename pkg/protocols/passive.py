"""
Fully passive protocol - phases known only up to their slice
"""

from typing import List

from models import ChannelConfig, KGObservables, SliceCombination, TransitionMatrix
from protocols.base_protocol import BaseProtocol
from utils.channel_model import kg_observables
from utils.passive_source import transition_for_slices


class PassiveProtocol(BaseProtocol):
    """Signals averaged over slice boxes, photons lost in each user's local channel"""

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.name = "passive"
        self.description = "Fully passive sources with M phase slices per pulse"

    def kg_observables(self, cfg: ChannelConfig, combo: SliceCombination) -> KGObservables:
        return kg_observables(cfg, combo, rel_tol=self.rel_tol_click)

    def transitions(self, cfg: ChannelConfig, combo: SliceCombination, n_bar: int) -> List[TransitionMatrix]:
        return [self._transition(cfg, *combo.pair(i), n_bar) for i in range(cfg.n_users)]

    def warm_cache(self, cfg: ChannelConfig, n_bar: int) -> None:
        super().warm_cache(cfg, n_bar)
        for offset in range(cfg.slices):
            self._transition(cfg, 1, 1 + offset, n_bar)

    def _transition(self, cfg: ChannelConfig, k1: int, k2: int, n_bar: int) -> TransitionMatrix:
        # the law depends on the slice offset only
        key = {
            "slices": cfg.slices,
            "offset": (k2 - k1) % cfg.slices,
            "n_bar": n_bar,
            "rel_tol": self.rel_tol_transition,
        }
        probs = self._cached(
            "transition", key, lambda: transition_for_slices(k1, k2, n_bar, cfg.source, self.rel_tol_transition).probs
        )
        return TransitionMatrix(probs=probs)
