"""3D vector helpers, array specifications and far-field array responses.

Conventions
-----------
The BS carries a uniform linear array (ULA) whose axis is ``ArraySpec.x_axis``.
Each IRS carries an ``m1 x m2`` uniform rectangular array (URA).  Its local
frame is ``x = x_axis`` (horizontal, ``m1`` elements), ``y = normal`` (facing
direction) and ``z = x_axis x normal`` (vertical, ``m2`` elements), which is
right-handed and puts local ``z`` along global ``+z`` for an upright surface.
Flat element index is ``p * m2 + q`` for horizontal index ``p`` and vertical
index ``q``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidArgumentError

_UNIT_TOL = 1e-12


def vec3(value: ArrayLike, name: str = "vector") -> NDArray[np.float64]:
    """Return ``value`` as a finite float array of shape (3,)."""
    v = np.asarray(value, dtype=float)
    if v.shape != (3,):
        raise InvalidArgumentError(f"{name} must have 3 components, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidArgumentError(f"{name} has non-finite components")
    return v


def unit(v: ArrayLike) -> NDArray[np.float64]:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise InvalidArgumentError("cannot normalize a zero vector")
    return v / n


def direction(source: ArrayLike, target: ArrayLike) -> NDArray[np.float64]:
    """Unit vector pointing from ``source`` to ``target``."""
    d = np.asarray(target, dtype=float) - np.asarray(source, dtype=float)
    if not np.any(d):
        raise InvalidArgumentError("coincident positions have no direction")
    return d / np.linalg.norm(d)


def default_x_axis(normal: ArrayLike) -> NDArray[np.float64]:
    """Horizontal in-plane axis for a surface facing ``normal``.

    Chosen so that the local vertical ``x_axis x normal`` points up whenever
    the surface is not horizontal.
    """
    n = unit(normal)
    x = np.cross(n, [0.0, 0.0, 1.0])
    if np.linalg.norm(x) < 1e-9:
        # surface faces straight up or down
        x = np.array([1.0, 0.0, 0.0])
        x = x - np.dot(x, n) * n
    return unit(x)


@dataclass(frozen=True)
class ArraySpec:
    """Geometry of a BS ULA or an IRS URA.

    ``spacing`` is in meters.  For a ULA, ``x_axis`` is the array axis and
    ``normal`` is only carried for completeness.
    """

    kind: str
    m1: int
    m2: int
    spacing: float
    normal: tuple[float, float, float] = (0.0, 1.0, 0.0)
    x_axis: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("ULA", "URA"):
            raise InvalidArgumentError(f"unknown array kind {self.kind!r}")
        if int(self.m1) != self.m1 or int(self.m2) != self.m2 or self.m1 < 1 or self.m2 < 1:
            raise InvalidArgumentError("element counts must be positive integers")
        if self.kind == "ULA" and self.m2 != 1:
            raise InvalidArgumentError("a ULA has m2 = 1")
        if not (np.isfinite(self.spacing) and self.spacing > 0):
            raise InvalidArgumentError("element spacing must be positive")
        n = np.asarray(self.normal, dtype=float)
        x = np.asarray(self.x_axis, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > _UNIT_TOL or abs(np.linalg.norm(x) - 1.0) > _UNIT_TOL:
            raise InvalidArgumentError("normal and x_axis must be unit vectors")
        if abs(np.dot(n, x)) > _UNIT_TOL:
            raise InvalidArgumentError("x_axis must be orthogonal to normal")

    @classmethod
    def ula(cls, n: int, spacing: float, axis: ArrayLike = (1.0, 0.0, 0.0)) -> "ArraySpec":
        ax = unit(axis)
        helper = np.array([0.0, 0.0, 1.0]) if abs(ax[2]) < 0.9 else np.array([0.0, 1.0, 0.0])
        normal = unit(np.cross(helper, ax))
        return cls("ULA", int(n), 1, float(spacing), tuple(normal), tuple(ax))

    @classmethod
    def ura(cls, m1: int, m2: int, spacing: float, normal: ArrayLike,
            x_axis: ArrayLike | None = None) -> "ArraySpec":
        n = unit(normal)
        x = default_x_axis(n) if x_axis is None else unit(x_axis)
        return cls("URA", int(m1), int(m2), float(spacing), tuple(n), tuple(x))

    @property
    def n_elements(self) -> int:
        return self.m1 * self.m2

    @property
    def up(self) -> NDArray[np.float64]:
        """Local vertical axis of a URA."""
        return np.cross(self.x_axis, self.normal)

    def with_size(self, m1: int, m2: int) -> "ArraySpec":
        return ArraySpec(self.kind, int(m1), int(m2), self.spacing, self.normal, self.x_axis)


def steering_vector(phi: float, n: int) -> NDArray[np.complex128]:
    """ULA steering vector ``[1, e^{-j pi phi}, ..., e^{-j pi (n-1) phi}]``."""
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"steering vector length must be >= 1, got {n}")
    if not np.isfinite(phi):
        raise InvalidArgumentError("phase difference must be finite")
    return np.exp(-1j * np.pi * phi * np.arange(int(n)))


def ula_cosine(array: ArraySpec, source: ArrayLike, target: ArrayLike) -> float:
    """cos of the departure angle between the ULA axis and ``target``."""
    return float(np.dot(array.x_axis, direction(source, target)))


def bs_array_response(array: ArraySpec, target: ArrayLike, source: ArrayLike,
                      wavelength: float) -> NDArray[np.complex128]:
    """Transmit response of the BS ULA located at ``source`` toward ``target``."""
    cos_t = ula_cosine(array, source, target)
    return steering_vector(2.0 * array.spacing / wavelength * cos_t, array.m1)


def ura_angles(array: ArraySpec, node: ArrayLike, irs_pos: ArrayLike) -> tuple[float, float]:
    """(azimuth, elevation) in radians of ``node`` seen from the IRS local frame.

    Elevation is the polar angle from local z, azimuth is measured in the
    local x-y plane from local x.  The same pair serves as AoD toward ``node``
    and AoA from ``node``.
    """
    u = direction(irs_pos, node)
    x = float(np.dot(u, array.x_axis))
    y = float(np.dot(u, array.normal))
    z = float(np.clip(np.dot(u, array.up), -1.0, 1.0))
    return float(np.arctan2(y, x)), float(np.arccos(z))


def ura_phases(array: ArraySpec, node: ArrayLike, irs_pos: ArrayLike,
               wavelength: float) -> tuple[float, float]:
    """Horizontal and vertical inter-element phase differences toward ``node``."""
    u = direction(irs_pos, node)
    k = 2.0 * array.spacing / wavelength
    # sin(el) cos(az) and cos(el) are the local x and z projections of u
    return k * float(np.dot(u, array.x_axis)), k * float(np.dot(u, array.up))


def irs_array_response(array: ArraySpec, node: ArrayLike, irs_pos: ArrayLike,
                       wavelength: float) -> NDArray[np.complex128]:
    """URA response of the IRS at ``irs_pos`` toward (or from) ``node``."""
    ph, pv = ura_phases(array, node, irs_pos, wavelength)
    return np.kron(steering_vector(ph, array.m1), steering_vector(pv, array.m2))
