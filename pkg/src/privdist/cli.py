"""Command line entry point: ``privdist keygen|demo|party|bench``."""

from __future__ import annotations

import argparse
import os
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from . import keyfile
from .bench import bench, expected_counts, format_table, linear_fit, time_exponentiation
from .encoding import DEFAULT_SCALE, FixedPointCodec
from .groups import GroupParams, UnknownGroupError, keygen, load_standard_group, sig_keygen
from .haversine import EARTH_RADIUS_KM, EarthModel, GeoPoint, haversine_direct
from .protocol import (
    C,
    P1,
    P2,
    ProtocolConfig,
    ProtocolError,
    Session,
    generate_session_keys,
    make_config,
)
from .transport import InMemoryTransport, TransportError, parse_addr
from .wire import WireError

ENV_PREFIX = "PRIVDIST_"
KEY_FIELDS = ("c_public", "c_secret", "p1_sig_public", "p1_sig_secret",
              "p2_sig_public", "p2_sig_secret")


def parse_point(text: str) -> GeoPoint:
    """``"LAT,LON"`` in decimal degrees."""
    try:
        lat, lon = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LAT,LON in degrees, got {text!r}") from None
    if not (-90 <= lat <= 90 and -180 <= lon <= 180):
        raise argparse.ArgumentTypeError(f"coordinates out of range: {text!r}")
    return GeoPoint.from_degrees(lat, lon)


def _group(name: str) -> GroupParams:
    try:
        return load_standard_group(name)
    except UnknownGroupError as exc:
        raise argparse.ArgumentTypeError(str(exc.args[0])) from None


# -- run config -------------------------------------------------------------

@dataclass
class RunConfig:
    group: str = "modp-2048"
    scale: int = DEFAULT_SCALE
    n: int = 20
    radius: float = EARTH_RADIUS_KM
    session: str = "session"
    c_addr: str = "127.0.0.1:7400"
    p1_addr: str = "127.0.0.1:7401"
    point: Optional[str] = None
    timeout: float = 30.0
    seed: Optional[int] = None
    keys: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def parse(cls, text: str, base_dir: Path = Path("."), environ=None) -> "RunConfig":
        environ = os.environ if environ is None else environ
        cfg = cls()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not key:
                raise ValueError(f"line {lineno}: expected key = value")
            if key in KEY_FIELDS:
                cfg.keys[key] = value
            elif key in ("scale", "n", "seed"):
                setattr(cfg, key, int(value))
            elif key in ("radius", "timeout"):
                setattr(cfg, key, float(value))
            elif key in ("group", "session", "c_addr", "p1_addr", "point"):
                setattr(cfg, key, value)
            else:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
        for k in KEY_FIELDS:
            env = environ.get(ENV_PREFIX + k.upper())
            if env:
                cfg.keys[k] = env
        for k, v in cfg.keys.items():
            p = Path(v)
            cfg.keys[k] = str(p if p.is_absolute() else base_dir / p)
        if cfg.scale <= 0 or cfg.scale % 2:
            raise ValueError("scale must be a positive even integer")
        if cfg.n < 4:
            raise ValueError("networked runs need N >= 4")
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        return cls.parse(path.read_text(), path.parent)

    def key_path(self, name: str) -> Path:
        if name not in self.keys:
            raise ValueError(f"config is missing {name}")
        p = Path(self.keys[name])
        if not p.exists():
            raise ValueError(f"{name}: no such file {p}")
        return p


def _same_group(a: GroupParams, b: GroupParams, what: str) -> None:
    if (a.p, a.g) != (b.p, b.g):
        raise ValueError(f"{what} was generated for a different group")


def protocol_config(rc: RunConfig) -> ProtocolConfig:
    params = load_standard_group(rc.group)
    gp, y = keyfile.load_enc_public(rc.key_path("c_public"))
    _same_group(gp, params, "c_public")
    g1, v1 = keyfile.load_sig_public(rc.key_path("p1_sig_public"))
    g2, v2 = keyfile.load_sig_public(rc.key_path("p2_sig_public"))
    _same_group(g1, params, "p1_sig_public")
    _same_group(g2, params, "p2_sig_public")
    return ProtocolConfig(
        group=params, c_pubkey=y, codec=FixedPointCodec(params, rc.scale), n=rc.n,
        p1_sig_pub=v1, p2_sig_pub=v2, session_id=rc.session.encode(),
        earth=EarthModel(rc.radius),
    )


def _rng(seed: Optional[int], salt: str = ""):
    if seed is None:
        return random.SystemRandom()
    return random.Random(f"{seed}:{salt}")


# -- subcommands ------------------------------------------------------------

def cmd_keygen(args) -> int:
    params = _group(args.group)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = _rng(args.seed)
    written = []
    written += keyfile.save_enc_keys(out, "c", params, keygen(params, rng))
    written += keyfile.save_sig_keys(out, "p1", params, sig_keygen(params, rng))
    written += keyfile.save_sig_keys(out, "p2", params, sig_keygen(params, rng))
    for p in written:
        print(p)
    return 0


def _demo_points(args):
    if args.coords:
        if len(args.coords) != 4 or args.p1 or args.p2:
            raise argparse.ArgumentTypeError("give LAT1 LON1 LAT2 LON2 or --p1/--p2, not both")
        lat1, lon1, lat2, lon2 = args.coords
        return parse_point(f"{lat1},{lon1}"), parse_point(f"{lat2},{lon2}")
    if args.p1 is None or args.p2 is None:
        raise argparse.ArgumentTypeError("need two points")
    return args.p1, args.p2


def cmd_demo(args) -> int:
    args.p1, args.p2 = _demo_points(args)
    params = _group(args.group)
    rng = _rng(args.seed)
    keys = generate_session_keys(params, rng)
    earth = EarthModel(args.radius)
    cfg = make_config(params, keys, n=args.n, scale=args.scale, earth=earth,
                      session_id=b"demo")
    session = Session(cfg, args.p1, args.p2, keys, rng)
    transport = InMemoryTransport(params)
    d1, d2 = session.run(transport)
    oracle = haversine_direct(args.p1, args.p2, earth)
    exp_time = time_exponentiation(params, 20, rng)
    expected = expected_counts(args.n)
    print(f"distance (P1)      {d1:.6f} km")
    print(f"distance (P2)      {d2:.6f} km")
    print(f"plaintext oracle   {oracle:.6f} km")
    print(f"delta              {abs(d1 - oracle) * 1000:.6f} m")
    print(f"messages           {transport.transmissions}")
    for role in (P1, P2, C):
        count = session.counters[role].count
        print(f"{role} exponentiations {count:>5} (expected {expected[role]}), "
              f"{session.elapsed[role] * 1000:.1f} ms")
    print(f"per exponentiation {exp_time * 1000:.3f} ms ({params.p.bit_length()}-bit group)")
    return 0


def cmd_party(args) -> int:
    from . import net

    rc = RunConfig.load(args.config)
    cfg = protocol_config(rc)
    rng = _rng(rc.seed, args.role)
    if args.role == C:
        _, ckeys = keyfile.load_enc_secret(rc.key_path("c_secret"))
        server = net.ControlCenterServer(
            cfg, ckeys, net.listen(parse_addr(rc.c_addr)), timeout=rc.timeout,
            max_sessions=args.sessions, on_audit=lambda a: print(a.line(), flush=True), rng=rng)
        audits = server.serve()
        return 0 if audits and all(a.status == "ok" for a in audits) else 1
    if rc.point is None:
        raise ValueError("config is missing point")
    point = parse_point(rc.point)
    if args.role == P1:
        _, sk = keyfile.load_sig_secret(rc.key_path("p1_sig_secret"))
        listener = net.listen(parse_addr(rc.p1_addr))
        out = net.run_p1(cfg, point, sk, listener, parse_addr(rc.c_addr), rng, rc.timeout)
    else:
        _, sk = keyfile.load_sig_secret(rc.key_path("p2_sig_secret"))
        out = net.run_p2(cfg, point, sk, parse_addr(rc.p1_addr), parse_addr(rc.c_addr),
                         rng, rc.timeout)
    print(f"{out.distance:.6f}")
    return 0


def cmd_bench(args) -> int:
    params = _group(args.group)
    rows = bench(args.n, params, args.scale, _rng(args.seed))
    print(format_table(rows))
    print(f"per exponentiation {rows[0].exp_time * 1000:.3f} ms "
          f"({params.p.bit_length()}-bit group)")
    if len(rows) >= 2:
        _, _, r2 = linear_fit([r.n for r in rows], [r.seconds[P1] for r in rows])
        print(f"P1 time vs N: R^2 = {r2:.4f}")
    return 0 if all(r.counts_match for r in rows) else 1


def _n_list(text: str) -> List[int]:
    try:
        ns = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N1,N2,..., got {text!r}") from None
    if not ns or min(ns) < 4:
        raise argparse.ArgumentTypeError("every N must be >= 4")
    return ns


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="privdist", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    k = sub.add_parser("keygen", help="write key files for C, P1 and P2")
    k.add_argument("--out", required=True)
    k.add_argument("--group", default="modp-2048")
    k.add_argument("--seed", type=int)
    k.set_defaults(func=cmd_keygen)

    d = sub.add_parser("demo", help="run all three parties in-process")
    d.add_argument("coords", nargs="*", type=float, metavar="DEG",
                   help="LAT1 LON1 LAT2 LON2, instead of --p1/--p2")
    d.add_argument("--p1", type=parse_point, metavar="LAT,LON")
    d.add_argument("--p2", type=parse_point, metavar="LAT,LON")
    d.add_argument("--n", type=int, default=20)
    d.add_argument("--scale", type=int, default=DEFAULT_SCALE)
    d.add_argument("--group", default="modp-2048")
    d.add_argument("--radius", type=float, default=EARTH_RADIUS_KM)
    d.add_argument("--seed", type=int)
    d.set_defaults(func=cmd_demo)

    p = sub.add_parser("party", help="run one role over TCP")
    p.add_argument("--role", choices=(P1, P2, C), required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--sessions", type=int, default=1, help="C only; 0 serves forever")
    p.set_defaults(func=cmd_party)

    b = sub.add_parser("bench", help="exponentiation counts and timings per N")
    b.add_argument("--n", type=_n_list, default=[10, 50, 100, 200])
    b.add_argument("--group", default="modp-2048")
    b.add_argument("--scale", type=int, default=DEFAULT_SCALE)
    b.add_argument("--seed", type=int)
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProtocolError as exc:
        print(f"abort: {exc}", file=sys.stderr)
    except (TransportError, WireError) as exc:
        print(f"transport error: {exc}", file=sys.stderr)
    except (ValueError, OSError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
