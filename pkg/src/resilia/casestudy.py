"""Three-room temperature model with seven symmetric actuators.

Rooms 1 and 3 exchange heat with neighbours held at ``T_goal``; all rooms
share a central heating/AC unit and each has a door/window pair and a
solar/loss pair.  In coordinates ``x = T - T_goal`` the affine term
vanishes and the model is ``x' = A x + B_bar u_bar`` with ``|u_bar_i| <= 1``.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .system import LinearSystem

ACTUATORS = ("sl1", "sl2", "sl3", "dw1", "dw2", "dw3", "hac")
DEFAULT_X0 = (0.8, 0.7, 0.9)


@dataclass(frozen=True)
class TemperatureParams:
    a: float = 12.0          # wall area, m^2
    mCp: float = 42186.0     # J/K
    U_g1: float = 6.27       # W/K
    U_12: float = 5.08
    U_23: float = 5.41
    U_3g: float = 6.27
    Q_hAC: float = 350.0     # W
    Q_dw: float = 300.0
    Q_Sl: float = 200.0
    T_goal: float = 293.0    # K

    def __post_init__(self):
        bad = [k for k, v in asdict(self).items() if not v > 0]
        if bad:
            raise ValueError(f"parameters must be positive: {bad}")


def actuator_index(name):
    """Zero-based column of ``B_bar`` for an actuator name such as ``"dw1"``."""
    try:
        return ACTUATORS.index(name.lower())
    except ValueError:
        raise ValueError(f"unknown actuator {name!r}; expected one of {ACTUATORS}") from None


def temperature_matrices(p: TemperatureParams = TemperatureParams()):
    """Return ``(A, B_bar, D)`` of ``T' = A T + B_bar u_bar + D T_goal``.

    Wall conduction carries the area factor ``a``, as in the heat-flow
    definitions ``q_ij = a U_ij (T_j - T_i)``.
    """
    U = np.array([
        [-p.U_g1 - p.U_12, p.U_12, 0.0],
        [p.U_12, -p.U_12 - p.U_23, p.U_23],
        [0.0, p.U_23, -p.U_23 - p.U_3g],
    ])
    A = p.a * U / p.mCp
    D = p.a * np.array([p.U_g1, 0.0, p.U_3g]) / p.mCp
    S, W, H = p.Q_Sl, p.Q_dw, p.Q_hAC
    B_bar = np.array([
        [S, 0, 0, W, 0, 0, H],
        [0, S, 0, 0, W, 0, H],
        [0, 0, S, 0, 0, W, H],
    ], dtype=float) / p.mCp
    return A, B_bar, D


def build_temperature_system(p: TemperatureParams = TemperatureParams(), lost=("dw1",)) -> LinearSystem:
    """Shifted temperature model with the named (or indexed) actuators lost."""
    A, B_bar, D = temperature_matrices(p)
    # the goal temperature is an equilibrium, so the shift removes D T_goal
    residual = D * p.T_goal + A @ np.ones(3) * p.T_goal
    assert np.allclose(residual, 0.0, atol=1e-12 * p.T_goal), residual
    idx = [actuator_index(k) if isinstance(k, str) else int(k) for k in lost]
    return LinearSystem(A, B_bar, np.ones(B_bar.shape[1]), tuple(idx))
