"""Exponentiation accounting and local timing.

Per honest session each user performs ``8 + 2(N-3) + 1`` exponentiations:
four ElGamal encryptions of its trig values, the ``N-3`` mask encryptions
(P1 creates them, P2 re-creates them to audit ``E_A'``) and one signature.
C performs ``N`` decryptions plus two signature verifications at three
exponentiations each.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional

import numpy as np

from .groups import GroupParams, powmod
from .haversine import GeoPoint
from .protocol import C, P1, P2, Session, generate_session_keys, make_config
from .transport import InMemoryTransport

CIPHERTEXT_COST = 8
SIGNATURE_COST = 1
VERIFY_COST = 3


def mask_cost(n: int) -> int:
    return 2 * (n - 3)


def user_cost(n: int) -> int:
    return CIPHERTEXT_COST + mask_cost(n) + SIGNATURE_COST


def center_cost(n: int) -> int:
    return n + 2 * VERIFY_COST


def expected_counts(n: int) -> Dict[str, int]:
    return {P1: user_cost(n), P2: user_cost(n), C: center_cost(n)}


def time_exponentiation(params: GroupParams, samples: int = 50, rng=None) -> float:
    """Mean wall-clock seconds of one full-size modular exponentiation."""
    rng = rng or random.Random()
    bases = [rng.randrange(2, params.p - 1) for _ in range(samples)]
    exps = [rng.randrange(1, params.q) for _ in range(samples)]
    t0 = time.perf_counter()
    for b, e in zip(bases, exps):
        powmod(b, e, params.p)
    return (time.perf_counter() - t0) / samples


@dataclass
class BenchRow:
    n: int
    counts: Dict[str, int]
    expected: Dict[str, int]
    seconds: Dict[str, float]
    exp_time: float
    distance_km: float

    @property
    def counts_match(self) -> bool:
        return self.counts == self.expected

    @property
    def projected(self) -> Dict[str, float]:
        return {r: c * self.exp_time for r, c in self.counts.items()}


def bench(ns: Iterable[int], params: GroupParams, scale: Optional[int] = None,
          rng=None, exp_samples: int = 50) -> List[BenchRow]:
    rng = rng or random.Random()
    keys = generate_session_keys(params, rng)
    exp_time = time_exponentiation(params, exp_samples, rng)
    rows = []
    for n in ns:
        cfg = make_config(params, keys, n=n, scale=scale, session_id=f"bench-{n}".encode())
        p1 = GeoPoint.from_degrees(rng.uniform(-80, 80), rng.uniform(-179, 179))
        p2 = GeoPoint.from_degrees(rng.uniform(-80, 80), rng.uniform(-179, 179))
        session = Session(cfg, p1, p2, keys, rng)
        d1, _ = session.run(InMemoryTransport(params))
        rows.append(BenchRow(
            n=n,
            counts={r: c.count for r, c in session.counters.items()},
            expected=expected_counts(n),
            seconds=dict(session.elapsed),
            exp_time=exp_time,
            distance_km=d1,
        ))
    return rows


def linear_fit(xs, ys):
    """Least-squares line; returns (slope, intercept, r_squared)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def format_table(rows: List[BenchRow]) -> str:
    head = (f"{'N':>5} {'P1 exp':>7} {'P2 exp':>7} {'C exp':>6} {'ok':>3} "
            f"{'P1 s':>8} {'P2 s':>8} {'C s':>8} {'P1 proj s':>10}")
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(
            f"{r.n:>5} {r.counts[P1]:>7} {r.counts[P2]:>7} {r.counts[C]:>6} "
            f"{'yes' if r.counts_match else 'NO':>3} "
            f"{r.seconds[P1]:>8.3f} {r.seconds[P2]:>8.3f} {r.seconds[C]:>8.3f} "
            f"{r.projected[P1]:>10.3f}"
        )
    return "\n".join(lines)
