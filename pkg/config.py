"""
Settings layer
Reads caps and logging options from the environment (.env supported)
"""

import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()

ENV_PREFIX = "SEPCLASS_"


class Settings(BaseModel):
    """Caps shared by the direct checker, the game solver and the axiom generator"""

    enumeration_cap: int = Field(default=6, ge=1, description="max universe size for subset enumeration")
    interpretation_bits: int = Field(default=20, ge=1, description="max fresh-relation tuples for pseudoelementary checks")
    survival_cap: int = Field(default=16, ge=1, description="survival-round cut-off")
    position_space_cap: int = Field(default=2 ** 30, ge=1, description="max 3^(K*n) positions")
    axiom_size_cap: int = Field(default=1_000_000, ge=1, description="max estimated nodes per generated sentence")
    log_level: str = "WARNING"


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(ENV_PREFIX + name)
    if raw is None or raw.strip() == "":
        return default
    return int(raw)


def get_settings() -> Settings:
    """Build settings from SEPCLASS_* environment variables"""
    defaults = Settings()
    return Settings(
        enumeration_cap=_env_int("ENUMERATION_CAP", defaults.enumeration_cap),
        interpretation_bits=_env_int("INTERPRETATION_BITS", defaults.interpretation_bits),
        survival_cap=_env_int("SURVIVAL_CAP", defaults.survival_cap),
        position_space_cap=_env_int("POSITION_SPACE_CAP", defaults.position_space_cap),
        axiom_size_cap=_env_int("AXIOM_SIZE_CAP", defaults.axiom_size_cap),
        log_level=os.getenv(ENV_PREFIX + "LOG_LEVEL", defaults.log_level).upper(),
    )


def resolve_cap(explicit: Optional[int], name: str) -> int:
    """Explicit keyword override wins, otherwise the environment setting"""
    if explicit is not None:
        return explicit
    return getattr(get_settings(), name)
