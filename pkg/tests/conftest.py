import numpy as np
import pytest

from thermofit import config as cfgmod


def small_plate_dict(scenario="identify_monolithic", **overrides):
    """A fast rect-mesh identification setup used across driver tests."""
    d = {
        "scenario": scenario,
        "mesh": {"kind": "rect", "nx": 4, "ny": 2, "lx": 4.0, "ly": 2.0},
        "material": {
            "thickness": 0.1, "poisson": 0.3, "alpha": 1e-5,
            "pristine_youngs": 2e11,
        },
        "supports": {"fixed_edges": ["left"]},
        "loads": [{"edge": "right", "qx": 1e7}],
        "target": {
            "damage_youngs": 2e10,
            "damage_boxes": [[1.0, 2.0, 0.0, 1.0]],
            "thermal": {"kind": "linear", "left": 30.0, "right": 10.0,
                        "x_max": 4.0},
        },
        "sensors": {
            "displacement_points": [[1.1, 0.4], [3.3, 1.7], [2.2, 1.2],
                                    [0.7, 1.5]],
            "temperature_points": [[0.6, 0.6], [2.7, 0.9], [3.5, 1.5]],
        },
        "initial": {"youngs": 1.998e11, "delta_t": 20.0},
        "identification": {
            "youngs_bounds": [2e9, 2e11],
            "delta_t_bounds": [-10.0, 40.0],
            "filter": {"youngs_radius": 1.2, "delta_t_radius": 2.0},
            "optimizer": {"max_step": 2.0, "max_iters": 50,
                          "target_reduction": 1e-6},
            "coupling": {"beta": 1.0, "inner_reduction": 0.2,
                         "inner_max_iters": 5, "outer_max_iters": 40},
        },
        "output": {"directory": "unused"},
    }
    for key, value in overrides.items():
        node = d
        parts = key.split(".")
        for p in parts[:-1]:
            node = node[p]
        node[parts[-1]] = value
    return d


@pytest.fixture
def small_config():
    return cfgmod.parse_config(small_plate_dict())
