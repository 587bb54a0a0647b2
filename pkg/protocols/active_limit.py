"""
Active-limit protocol - exactly prepared +-sqrt(u_max) signals
"""

from typing import List

from models import ChannelConfig, KGObservables, SliceCombination, TransitionMatrix
from protocols.base_protocol import BaseProtocol
from utils.channel_model import exact_kg_observables


class ActiveLimitProtocol(BaseProtocol):
    """Zero-width phase boxes: no local loss, no slice averaging"""

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.name = "active_limit"
        self.description = "Perfect phase preparation, the limit of vanishing slice width"

    def kg_observables(self, cfg: ChannelConfig, combo: SliceCombination) -> KGObservables:
        # every combination collapses onto the exact signals
        return exact_kg_observables(cfg)

    def transitions(self, cfg: ChannelConfig, combo: SliceCombination, n_bar: int) -> List[TransitionMatrix]:
        return [TransitionMatrix.identity(n_bar) for _ in range(cfg.n_users)]
