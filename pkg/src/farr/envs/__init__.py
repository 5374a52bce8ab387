"""Environments: the cabinet matrix game, Lava World and WindyWalk."""
import importlib

_EXPORTS = {
    "canonical_cabinet_game": "cabinet",
    "GridMap": "lavaworld", "LavaWorldEnv": "lavaworld", "lava_step": "lavaworld", "load_map": "lavaworld",
    "WindyWalkEnv": "windywalk", "windy_step": "windywalk",
}

__all__ = sorted(_EXPORTS)


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(importlib.import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
