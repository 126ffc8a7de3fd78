"""Named parameter sets matching the captioned figures (energies in units of omega0)."""
from __future__ import annotations

import math

from .errors import InvalidParameter
from .model import SystemSpec

# N = 6 on resonance, lambda_1^2 = 0.1, the rest drawn from {0, +-0.1, +-0.2}
FIG3_COUPLINGS = (0.1, 0.0, 0.1, -0.1, 0.2, -0.2)

PRESETS = {
    "fig3": {
        "system": SystemSpec(1.0, 1.0, 2.0, FIG3_COUPLINGS),
        "defaults": {},
    },
    "fig4": {
        # single system, S0 = 4, g^2 / (w0 wc) = 0.1
        "system": SystemSpec(1.0, 1.0, 2.0, (math.sqrt(0.1),)),
        "defaults": {"param": "g2ratio", "start": 0.0, "stop": 0.3, "num": 31,
                     "s0_values": [1.0, 2.0, 4.0, 8.0], "mode": "rwa"},
    },
    "fig5": {
        # single system, RWA polaritons at 1 +- 0.1, beta omega = 5
        "system": SystemSpec(1.0, 1.0, 2.0, (0.1,)),
        "defaults": {"beta": 5.0, "mode": "rwa"},
    },
    "uncoupled": {
        "system": SystemSpec(1.0, 1.0, 2.0, (0.0,) * 6),
        "defaults": {},
    },
}
ALIASES = {"fig2": "fig3", "fig3params": "fig3"}
VERIFY_PRESETS = ("fig3", "fig4", "fig5", "uncoupled")


def resolve(name: str) -> str:
    key = ALIASES.get(name, name)
    if key not in PRESETS:
        known = ", ".join(sorted(set(PRESETS) | set(ALIASES)))
        raise InvalidParameter(f"unknown preset {name!r}; choose from {known}")
    return key


def preset_system(name: str) -> SystemSpec:
    return PRESETS[resolve(name)]["system"]


def preset_defaults(name: str) -> dict:
    return dict(PRESETS[resolve(name)]["defaults"])
