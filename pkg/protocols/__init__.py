"""
Protocol factory - Creates protocol instances by name
"""

from typing import Dict, List, Optional, Type

from protocols.active_limit import ActiveLimitProtocol
from protocols.base_protocol import BaseProtocol
from protocols.passive import PassiveProtocol
from utils.errors import ParameterError
from utils.storage import ResultCache


class ProtocolFactory:
    """Factory for creating protocol instances"""

    _protocols: Dict[str, Type[BaseProtocol]] = {
        "passive": PassiveProtocol,
        "active_limit": ActiveLimitProtocol,
    }

    @classmethod
    def get_protocol(
        cls,
        protocol_type: str,
        rel_tol_click: float = 1e-4,
        rel_tol_transition: float = 1e-6,
        cache: Optional[ResultCache] = None,
    ) -> BaseProtocol:
        """Build a protocol instance by type"""
        protocol_cls = cls._protocols.get(protocol_type.lower())
        if not protocol_cls:
            raise ParameterError(f"Unknown protocol type: {protocol_type}")
        return protocol_cls(rel_tol_click=rel_tol_click, rel_tol_transition=rel_tol_transition, cache=cache)

    @classmethod
    def get_protocol_names(cls) -> List[str]:
        return list(cls._protocols.keys())
