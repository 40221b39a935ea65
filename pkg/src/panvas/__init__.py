"""Panvas: community-driven scholarly publishing with a credit economy.

The platform combines a double-entry credit ledger with role-based epoch
settlement, a paid review marketplace with expertise matching, parimutuel
prediction markets on paper acceptance, fragment-based living documents,
pseudonymous engagement, and rule-based moderation — all behind an
event-sourced HTTP service plus a deterministic simulation harness.
"""

from .config import ServiceConfig, load_config
from .core import Platform
from .errors import PanvasError

__version__ = "0.1.0"

__all__ = ["Platform", "ServiceConfig", "load_config", "PanvasError", "__version__"]
