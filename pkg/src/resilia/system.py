"""Linear system ``x' = A x + B_bar u_bar`` and its split after actuator loss."""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch
from .geometry import HyperBox, Zonotope, image_box
from .linalg import as_square


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """System matrices with a box input set and a list of lost actuators.

    ``lost`` holds zero-based column indices of ``B_bar``; those columns form
    ``C`` (the undesirable inputs ``w``) and the rest form ``B``.
    """

    A: np.ndarray
    B_bar: np.ndarray
    half_widths: np.ndarray = None
    lost: tuple = field(default_factory=tuple)

    def __post_init__(self):
        A = as_square(self.A)
        B_bar = np.asarray(self.B_bar, dtype=float)
        if B_bar.ndim == 1:
            B_bar = B_bar.reshape(A.shape[0], -1)
        if B_bar.shape[0] != A.shape[0]:
            raise DimensionMismatch(f"B_bar has {B_bar.shape[0]} rows, A is {A.shape[0]}x{A.shape[0]}")
        hw = np.ones(B_bar.shape[1]) if self.half_widths is None else np.asarray(self.half_widths, float)
        if hw.shape != (B_bar.shape[1],):
            raise DimensionMismatch("one half-width per column of B_bar is required")
        lost = tuple(int(i) for i in self.lost)
        if len(set(lost)) != len(lost) or any(not 0 <= i < B_bar.shape[1] for i in lost):
            raise ValueError(f"invalid lost actuator indices {lost}")
        if len(lost) == B_bar.shape[1]:
            raise ValueError("at least one actuator must remain under control")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B_bar", B_bar)
        object.__setattr__(self, "half_widths", hw)
        object.__setattr__(self, "lost", lost)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def kept(self):
        return tuple(i for i in range(self.B_bar.shape[1]) if i not in self.lost)

    @property
    def m(self):
        return len(self.kept)

    @property
    def p(self):
        return len(self.lost)

    @property
    def B(self):
        return self.B_bar[:, list(self.kept)]

    @property
    def C(self):
        return self.B_bar[:, list(self.lost)]

    @property
    def U_bar(self):
        return HyperBox(self.half_widths)

    @property
    def U(self):
        return HyperBox(self.half_widths[list(self.kept)])

    @property
    def W(self):
        """Box of undesirable inputs, or ``None`` when nothing is lost."""
        return HyperBox(self.half_widths[list(self.lost)]) if self.lost else None

    @cached_property
    def nominal_set(self) -> Zonotope:
        return image_box(self.B_bar, self.U_bar)

    @cached_property
    def control_set(self) -> Zonotope:
        return image_box(self.B, self.U)

    @cached_property
    def disturbance_set(self) -> Zonotope:
        if not self.lost:
            return Zonotope(np.zeros((self.n, 1)))
        return image_box(self.C, self.W)

    def with_lost(self, lost):
        return LinearSystem(self.A, self.B_bar, self.half_widths, tuple(lost))

    def with_half_widths(self, half_widths):
        return LinearSystem(self.A, self.B_bar, half_widths, self.lost)
