"""Grid-sampled scalar, vector and tensor fields.

Component layout (leading batch axes allowed everywhere):

* ``ScalarField.values``  -- ``(..., n_theta, n_phi)``
* ``VectorField.comp``    -- ``(..., 2, n_theta, n_phi)`` contravariant
* ``TensorField.comp``    -- ``(..., 2, 2, n_theta, n_phi)``

Tensor fields carry a variance tag: ``(1, 1)`` means the first component
axis is the upper index (as in a covariant derivative of a vector field),
``(0, 2)`` means both indices are lower (as in a deformation tensor).
Fields are immutable value objects; operations that combine a field with a
chart check that the trailing grid axes match the chart.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _as_readonly(arr):
    arr = np.asarray(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def _require_finite(arr, what):
    if not np.isfinite(arr).all():
        raise ValueError(f"{what} contains non-finite entries")


@dataclass(frozen=True)
class ScalarField:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_readonly(self.values))
        if self.values.ndim < 2:
            raise ValueError("scalar field needs at least (n_theta, n_phi) axes")
        _require_finite(self.values, "scalar field")

    @property
    def grid_shape(self):
        return self.values.shape[-2:]


@dataclass(frozen=True)
class VectorField:
    comp: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "comp", _as_readonly(self.comp))
        if self.comp.ndim < 3 or self.comp.shape[-3] != 2:
            raise ValueError("vector field needs shape (..., 2, n_theta, n_phi)")
        _require_finite(self.comp, "vector field")

    @property
    def grid_shape(self):
        return self.comp.shape[-2:]

    def __add__(self, other):
        return VectorField(self.comp + other.comp)

    def __sub__(self, other):
        return VectorField(self.comp - other.comp)

    def __mul__(self, scalar):
        return VectorField(self.comp * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField(-self.comp)


@dataclass(frozen=True)
class TensorField:
    comp: np.ndarray
    variance: tuple = field(default=(1, 1))

    def __post_init__(self):
        object.__setattr__(self, "comp", _as_readonly(self.comp))
        object.__setattr__(self, "variance", tuple(self.variance))
        if self.comp.ndim < 4 or self.comp.shape[-4:-2] != (2, 2):
            raise ValueError("tensor field needs shape (..., 2, 2, n_theta, n_phi)")
        if self.variance not in ((1, 1), (0, 2)):
            raise ValueError(f"unsupported variance tag {self.variance}")
        _require_finite(self.comp, "tensor field")

    @property
    def grid_shape(self):
        return self.comp.shape[-2:]


def check_grid(obj, chart, what="field"):
    """Raise if a field's grid axes do not match the chart grid."""
    shape = obj.grid_shape if hasattr(obj, "grid_shape") else np.shape(obj)[-2:]
    if tuple(shape) != (chart.n_theta, chart.n_phi):
        raise ValueError(
            f"{what} grid {tuple(shape)} does not match chart grid "
            f"({chart.n_theta}, {chart.n_phi})"
        )
