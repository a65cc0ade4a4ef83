"""Plaintext Haversine distance and its product-form decomposition.

Latitude is ``lat`` and longitude ``lon``, both in radians.  Functions accept
scalars or numpy arrays (broadcast together) for the angle fields.

The haversine quantity

    a = sin^2(dlat/2) + cos(lat1) cos(lat2) sin^2(dlon/2)

splits into six products of single-party trig values (``t1..t6``).  Using
``cos^2 x sin^2 y + sin^2 x cos^2 y = 1/2 - 1/2 cos 2x cos 2y`` the pairs
``t1+t3`` and ``t4+t6`` collapse, leaving

    a = 1/2 + a1 + a2 + a3

with ``a1 = -1/2 sin lat1 sin lat2``, ``a2 = -1/2 m sin lon1 sin lon2`` and
``a3 = -1/2 m cos lon1 cos lon2``, ``m = cos lat1 cos lat2``.  Those three
products are what the encrypted protocol computes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

EARTH_RADIUS_KM = 6371.0
A_TOLERANCE = 1e-9

SPLITS = ("six-term", "tilde-13", "tilde-46", "reduced")


class CorruptedRunError(ValueError):
    """The recovered haversine quantity is outside [0, 1] beyond noise."""


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        lat, lon = np.asarray(self.lat), np.asarray(self.lon)
        if not np.all((-math.pi / 2 <= lat) & (lat <= math.pi / 2)):
            raise ValueError(f"latitude {self.lat!r} rad outside [-pi/2, pi/2]")
        if not np.all((-math.pi < lon) & (lon <= math.pi)):
            raise ValueError(f"longitude {self.lon!r} rad outside (-pi, pi]")

    @classmethod
    def from_degrees(cls, lat: float, lon: float) -> "GeoPoint":
        # 180 E and 180 W are the same meridian; keep the half-open range
        if lon == -180.0:
            lon = 180.0
        return cls(math.radians(lat), math.radians(lon))


@dataclass(frozen=True)
class EarthModel:
    radius: float = EARTH_RADIUS_KM

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("earth radius must be positive")


@dataclass(frozen=True)
class TermBreakdown:
    m: ArrayLike
    t1: ArrayLike
    t2: ArrayLike
    t3: ArrayLike
    t4: ArrayLike
    t5: ArrayLike
    t6: ArrayLike
    t1_alt: ArrayLike
    t3_alt: ArrayLike
    t4_alt: ArrayLike
    t6_alt: ArrayLike

    @property
    def a1(self) -> ArrayLike:
        return self.t2

    @property
    def a2(self) -> ArrayLike:
        return self.t5

    @property
    def a3(self) -> ArrayLike:
        return self.t6_alt

    @property
    def a(self) -> ArrayLike:
        return 0.5 + self.a1 + self.a2 + self.a3


def haversine_a(lat1, lon1, lat2, lon2) -> ArrayLike:
    """Step-form haversine quantity, clamped into [0, 1]."""
    a = (np.sin((lat2 - lat1) / 2) ** 2
         + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2)
    return np.clip(a, 0.0, 1.0)


def haversine_direct(p1: GeoPoint, p2: GeoPoint, earth: EarthModel = EarthModel()) -> ArrayLike:
    a = haversine_a(p1.lat, p1.lon, p2.lat, p2.lon)
    d = 2 * earth.radius * np.arctan2(np.sqrt(a), np.sqrt(1 - a))
    return float(d) if np.ndim(d) == 0 else d


def term_breakdown(p1: GeoPoint, p2: GeoPoint) -> TermBreakdown:
    lat1, lon1, lat2, lon2 = p1.lat, p1.lon, p2.lat, p2.lon
    m = np.cos(lat1) * np.cos(lat2)
    return TermBreakdown(
        m=m,
        t1=np.cos(lat1 / 2) ** 2 * np.sin(lat2 / 2) ** 2,
        t2=-0.5 * np.sin(lat1) * np.sin(lat2),
        t3=np.sin(lat1 / 2) ** 2 * np.cos(lat2 / 2) ** 2,
        t4=m * np.cos(lon1 / 2) ** 2 * np.sin(lon2 / 2) ** 2,
        t5=-0.5 * m * np.sin(lon1) * np.sin(lon2),
        t6=m * np.sin(lon1 / 2) ** 2 * np.cos(lon2 / 2) ** 2,
        t1_alt=0.5 * np.ones_like(m),
        t3_alt=-0.5 * m,
        t4_alt=0.5 * m,
        t6_alt=-0.5 * m * np.cos(lon1) * np.cos(lon2),
    )


def a_from_split(tb: TermBreakdown, split: str) -> ArrayLike:
    if split == "six-term":
        return tb.t1 + tb.t2 + tb.t3 + tb.t4 + tb.t5 + tb.t6
    if split == "tilde-13":
        return tb.t1_alt + tb.t2 + tb.t3_alt + tb.t4 + tb.t5 + tb.t6
    if split == "tilde-46":
        return tb.t1 + tb.t2 + tb.t3 + tb.t4_alt + tb.t5 + tb.t6_alt
    if split == "reduced":
        return tb.t1_alt + tb.t2 + tb.t5 + tb.t6_alt
    raise ValueError(f"unknown split {split!r}; expected one of {SPLITS}")


def distance_from_a(a: float, earth: EarthModel = EarthModel(), tol: float = A_TOLERANCE) -> float:
    if not -tol <= a <= 1 + tol:
        raise CorruptedRunError(f"haversine quantity {a!r} outside [0, 1]")
    a = min(max(a, 0.0), 1.0)
    return 2 * earth.radius * math.atan2(math.sqrt(a), math.sqrt(1 - a))
