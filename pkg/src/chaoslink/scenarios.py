"""Built-in test scenarios: two antenna/path configurations, two noise models,
Rayleigh (m = 1) and Nakagami m = 4 fading, EF and DF relaying."""
from __future__ import annotations

from .channel import DF, EF, NoiseModel, Scenario

DEFAULT_GRID_DB = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)

# (label, noise exponent a, L, n, M_D)
_SETUPS = (
    ("scenario1", 2.0, 2, 2, 3),
    ("scenario2", 1.0, 2, 2, 3),
    ("scenario3", 2.0, 3, 3, 4),
    ("scenario4", 1.0, 3, 3, 4),
)
FADING_CASES = (1.0, 4.0)


def builtin_scenarios(grid_db=DEFAULT_GRID_DB, protocols=(EF, DF)) -> list[Scenario]:
    out = []
    for label, a, L, n, MD in _SETUPS:
        for case, m in enumerate(FADING_CASES, start=1):
            for proto in protocols:
                out.append(Scenario(
                    spreading_half_M=32, relay_antennas=1, dest_antennas=MD,
                    users_n=n, paths_L=L, fading_m=m, noise=NoiseModel(a),
                    protocol=proto, snr_grid_db=grid_db,
                    name=f"{label}-case{case}-{proto}",
                ))
    return out
