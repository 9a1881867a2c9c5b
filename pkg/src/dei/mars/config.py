"""Battle engine configuration."""

from __future__ import annotations

from dataclasses import dataclass, fields


class ConfigError(ValueError):
    """Raised when a configuration value is out of range or inconsistent."""


@dataclass(frozen=True)
class MarsConfig:
    """Parameters of the battle virtual machine.

    ``max_processes`` defaults to ``core_size``, which in practice means a
    warrior can never run out of process slots before running out of core.
    """

    core_size: int = 8000
    max_cycles: int = 80000
    max_processes: int | None = None
    max_warrior_length: int = 100
    min_separation: int = 100
    rounds_per_pair: int = 20

    def __post_init__(self) -> None:
        if self.max_processes is None:
            object.__setattr__(self, "max_processes", self.core_size)
        # the VM stores addresses and field values as int32
        if not 2 <= self.core_size <= 2**24:
            raise ConfigError("core_size must be in [2, 2**24]")
        if self.max_cycles < 1:
            raise ConfigError("max_cycles must be positive")
        if self.max_processes < 1:
            raise ConfigError("max_processes must be positive")
        if not 1 <= self.max_warrior_length <= self.core_size:
            raise ConfigError("max_warrior_length must be in [1, core_size]")
        if not self.max_warrior_length <= self.min_separation <= self.core_size:
            raise ConfigError(
                "min_separation must be in [max_warrior_length, core_size]"
            )
        if self.rounds_per_pair < 1:
            raise ConfigError("rounds_per_pair must be positive")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "MarsConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)
