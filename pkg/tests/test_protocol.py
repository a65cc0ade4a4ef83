import dataclasses
import math
import random
from collections import Counter

import pytest

from privdist import groups
from privdist.groups import Ciphertext, ExpCounter, decrypt, encrypt
from privdist.haversine import GeoPoint, haversine_direct, term_breakdown
from privdist.protocol import (
    BAD_SIGNATURE_P1,
    BAD_SIGNATURE_P2,
    C,
    CORRUPTED_RUN,
    DIGEST_MISMATCH,
    M2,
    M3,
    M4,
    M5,
    MALFORMED_CIPHERTEXT,
    P1,
    P2,
    REJECT_SIZE,
    REJECT_TAMPERED,
    SESSION_MISMATCH,
    ControlCenter,
    Party1,
    Party2,
    ProtocolError,
    Session,
    build_ea_prime,
    c_process,
    compute_terms,
    constant_ciphertexts,
    finalize,
    gen_masks,
    make_config,
    p2_verify,
    p_make_ciphertexts,
    payload_digest,
    run_session,
    signing_payload,
)
from privdist.transport import InMemoryTransport

from oracles import chord_distance

F = 10**12
BCN = GeoPoint.from_degrees(41.3851, 2.1734)
TGN = GeoPoint.from_degrees(41.1189, 1.2445)


@pytest.fixture
def cfg(g256, keys256):
    return make_config(g256, keys256, n=10, scale=F, session_id=b"s1")


def dec(cfg, keys, ct):
    return cfg.codec.decode_signed(decrypt(cfg.group, keys.c_keys.s, ct))


def honest_m2_m3(cfg, keys, rng, p1=BCN, p2=TGN):
    a = Party1(cfg, p1, keys.p1_sig, rng)
    b = Party2(cfg, p2, keys.p2_sig, rng)
    m1 = b.start()
    m2, m3 = a.on_m1(m1)
    return a, b, m2, m3


# -- ciphertext generation --------------------------------------------------

def test_party_ciphertexts_decrypt_to_encodings(cfg, keys256, rng):
    counter = ExpCounter()
    cts = p_make_ciphertexts(cfg, BCN, rng, counter)
    assert counter.count == 8
    expected = [math.cos(BCN.lat), math.sin(BCN.lat), math.cos(BCN.lon), math.sin(BCN.lon)]
    for ct, v in zip(cts.as_list(), expected):
        assert decrypt(cfg.group, keys256.c_keys.s, ct) == cfg.codec.encode_real(v)


def test_origin_uses_zero_perturbation(cfg, keys256, rng):
    cts = p_make_ciphertexts(cfg, GeoPoint(0.0, 0.0), rng)
    assert decrypt(cfg.group, keys256.c_keys.s, cts.e_sin_lat) == 1
    assert decrypt(cfg.group, keys256.c_keys.s, cts.e_sin_lon) == 1
    assert decrypt(cfg.group, keys256.c_keys.s, cts.e_cos_lat) == F


def test_constants(cfg, keys256, rng):
    e_half_neg, e_one = constant_ciphertexts(cfg)
    assert e_one == Ciphertext(1, F)
    assert e_half_neg == Ciphertext(1, cfg.group.p - F // 2)
    ct = encrypt(cfg.group, cfg.c_pubkey, 12345, rng=rng)
    prod = groups.hom_mul(cfg.group, e_one, ct)
    assert decrypt(cfg.group, keys256.c_keys.s, prod) == 12345 * F


# -- terms ------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(10))
def test_compute_terms_match_breakdown(cfg, keys256, seed):
    r = random.Random(seed)
    p1 = GeoPoint(r.uniform(-1.5, 1.5), r.uniform(-3.1, 3.1))
    p2 = GeoPoint(r.uniform(-1.5, 1.5), r.uniform(-3.1, 3.1))
    consts = constant_ciphertexts(cfg)
    terms = compute_terms(cfg, p_make_ciphertexts(cfg, p1, r), p_make_ciphertexts(cfg, p2, r),
                          consts)
    tb = term_breakdown(p1, p2)
    s5 = cfg.codec.term_scale
    assert abs(dec(cfg, keys256, terms.e_a1) / s5 - tb.a1) <= 3 / F
    assert abs(dec(cfg, keys256, terms.e_a2) / s5 - tb.a2) <= 5 / F
    assert abs(dec(cfg, keys256, terms.e_a3) / s5 - tb.a3) <= 5 / F


def test_compute_terms_coincident(cfg, keys256, rng):
    consts = constant_ciphertexts(cfg)
    terms = compute_terms(cfg, p_make_ciphertexts(cfg, BCN, rng), p_make_ciphertexts(cfg, BCN, rng),
                          consts)
    total = sum(dec(cfg, keys256, ct) for ct in terms.as_list())
    assert abs(total / cfg.codec.term_scale + 0.5) <= 1e-10


def test_compute_terms_deterministic_and_order_free(cfg, rng):
    consts = constant_ciphertexts(cfg)
    a, b = p_make_ciphertexts(cfg, BCN, rng), p_make_ciphertexts(cfg, TGN, rng)
    counter = ExpCounter()
    t1 = compute_terms(cfg, a, b, consts)
    assert compute_terms(cfg, b, a, consts) == t1
    assert compute_terms(cfg, a, b, constant_ciphertexts(cfg)) == t1
    assert counter.count == 0


# -- masks ------------------------------------------------------------------

def test_gen_masks_single(g256, keys256, rng):
    cfg = make_config(g256, keys256, scale=F, n=4)
    masks = gen_masks(cfg, rng)
    assert len(masks.values) == 1
    assert masks.S == masks.values[0]


def test_gen_masks_range_and_nonces(g256, keys256, rng):
    cfg = make_config(g256, keys256, scale=F, n=100)
    masks = gen_masks(cfg, rng)
    bound = F**5 // 2
    assert len(masks.values) == 97
    assert all(v != 0 and abs(v) <= bound for v in masks.values)
    assert all(1 <= r < g256.q for r in masks.randomness)
    assert masks.S == sum(masks.values)
    assert any(v < 0 for v in masks.values) and any(v > 0 for v in masks.values)


def test_mask_reencryption_reproducible(g256, keys256, rng):
    cfg = make_config(g256, keys256, scale=F, n=100)
    consts = constant_ciphertexts(cfg)
    terms = compute_terms(cfg, p_make_ciphertexts(cfg, BCN, rng),
                          p_make_ciphertexts(cfg, TGN, rng), consts)
    masks = gen_masks(cfg, rng)
    ea, sigma = build_ea_prime(cfg, terms, masks, rng)
    from privdist.protocol import encrypt_mask

    again = [encrypt_mask(cfg, v, r) for v, r in masks.pairs()]
    assert Counter(again) <= Counter(ea)
    assert sorted(sigma) == list(range(100))


def test_build_ea_prime_test_mode(g256, keys256, rng):
    cfg = make_config(g256, keys256, scale=F, n=3, allow_no_masks=True)
    consts = constant_ciphertexts(cfg)
    terms = compute_terms(cfg, p_make_ciphertexts(cfg, BCN, rng),
                          p_make_ciphertexts(cfg, TGN, rng), consts)
    masks = gen_masks(cfg, rng)
    counter = ExpCounter()
    ea, _ = build_ea_prime(cfg, terms, masks, rng, counter)
    assert Counter(ea) == Counter(terms.as_list())
    assert counter.count == 0


def test_n3_requires_test_mode(g256, keys256):
    with pytest.raises(ValueError):
        make_config(g256, keys256, scale=F, n=3)


@pytest.mark.parametrize("n", [4, 20])
def test_build_ea_prime_decryptions_and_cost(g256, keys256, rng, n):
    cfg = make_config(g256, keys256, scale=F, n=n)
    consts = constant_ciphertexts(cfg)
    terms = compute_terms(cfg, p_make_ciphertexts(cfg, BCN, rng),
                          p_make_ciphertexts(cfg, TGN, rng), consts)
    masks = gen_masks(cfg, rng)
    counter = ExpCounter()
    ea, sigma = build_ea_prime(cfg, terms, masks, rng, counter)
    assert counter.count == 2 * (n - 3)
    got = Counter(dec(cfg, keys256, ct) for ct in ea)
    want = Counter([dec(cfg, keys256, ct) for ct in terms.as_list()] + list(masks.values))
    assert got == want
    # terms sit inside the mask interval, so range alone does not single them out
    bound = F**5 // 2
    assert all(abs(dec(cfg, keys256, ct)) <= bound for ct in terms.as_list())


def test_permutation_is_uniform(g256, keys256):
    cfg = make_config(g256, keys256, scale=F, n=4)
    r = random.Random(1)
    consts = constant_ciphertexts(cfg)
    terms = compute_terms(cfg, p_make_ciphertexts(cfg, BCN, r), p_make_ciphertexts(cfg, TGN, r),
                          consts)
    masks = gen_masks(cfg, r)
    positions = Counter()
    for _ in range(2000):
        ea, sigma = build_ea_prime(cfg, terms, masks, r)
        positions[sigma.index(0)] += 1
    assert all(400 < positions[i] < 600 for i in range(4))


# -- P2 audit ---------------------------------------------------------------

def test_p2_accepts_honest(cfg, keys256, rng):
    a, b, m2, _ = honest_m2_m3(cfg, keys256, rng)
    m4 = b.on_m2(m2)
    assert b.S == a.S
    assert m4.digest == payload_digest(cfg, m2.ea_prime)


def test_p2_rejects_altered_mask(cfg, keys256, rng):
    _, b, m2, _ = honest_m2_m3(cfg, keys256, rng)
    masks = list(m2.masks_plain)
    v, r = masks[0]
    masks[0] = (v + 1 if v + 1 else v + 2, r)
    bad = dataclasses.replace(m2, masks_plain=tuple(masks))
    with pytest.raises(ProtocolError) as exc:
        b.on_m2(bad)
    assert exc.value.reason == REJECT_TAMPERED and exc.value.role == P2


def test_p2_rejects_reencrypted_term(cfg, keys256, rng):
    a, b, m2, _ = honest_m2_m3(cfg, keys256, rng)
    s = keys256.c_keys.s
    ea = list(m2.ea_prime)
    i = a.sigma.index(0)
    plain = decrypt(cfg.group, s, ea[i])
    ea[i] = encrypt(cfg.group, cfg.c_pubkey, plain, rng=rng)
    assert decrypt(cfg.group, s, ea[i]) == plain
    with pytest.raises(ProtocolError) as exc:
        b.on_m2(dataclasses.replace(m2, ea_prime=tuple(ea)))
    assert exc.value.reason == REJECT_TAMPERED


def test_p2_rejects_wrong_size(cfg, keys256, rng):
    _, b, m2, _ = honest_m2_m3(cfg, keys256, rng)
    with pytest.raises(ProtocolError) as exc:
        b.on_m2(dataclasses.replace(m2, ea_prime=m2.ea_prime[:-1]))
    assert exc.value.reason == REJECT_SIZE
    with pytest.raises(ProtocolError) as exc:
        b.on_m2(dataclasses.replace(m2, masks_plain=m2.masks_plain[1:]))
    assert exc.value.reason == REJECT_SIZE


def test_p2_rejects_out_of_interval_mask(cfg, keys256, rng):
    _, b, m2, _ = honest_m2_m3(cfg, keys256, rng)
    masks = list(m2.masks_plain)
    masks[0] = (F**5, masks[0][1])
    with pytest.raises(ProtocolError) as exc:
        b.on_m2(dataclasses.replace(m2, masks_plain=tuple(masks)))
    assert exc.value.reason == REJECT_TAMPERED


def test_p2_rejects_malformed_ciphertext(cfg, keys256, rng):
    _, b, m2, _ = honest_m2_m3(cfg, keys256, rng)
    ea = list(m2.ea_prime)
    ea[0] = Ciphertext(0, 1)
    with pytest.raises(ProtocolError) as exc:
        b.on_m2(dataclasses.replace(m2, ea_prime=tuple(ea)))
    assert exc.value.reason == MALFORMED_CIPHERTEXT


def test_p2_verify_function_returns_s(cfg, keys256, rng):
    _, b, m2, _ = honest_m2_m3(cfg, keys256, rng)
    counter = ExpCounter()
    S = p2_verify(cfg, m2, b.own, constant_ciphertexts(cfg), counter)
    assert S == sum(v for v, _ in m2.masks_plain)
    assert counter.count == 2 * cfg.mask_count


# -- control center ---------------------------------------------------------

def test_c_process_honest(cfg, keys256, rng):
    a, b, m2, m3 = honest_m2_m3(cfg, keys256, rng)
    m4 = b.on_m2(m2)
    counter = ExpCounter()
    m5 = c_process(cfg, m3, m4, keys256.c_keys, counter)
    assert counter.count == cfg.n + 6
    tb = term_breakdown(BCN, TGN)
    s5 = cfg.codec.term_scale
    ideal = (tb.a - 0.5) * s5 + a.S
    assert abs(m5.total - ideal) <= 15 * F**4
    d = finalize(cfg, m5, a.S)
    assert abs(d - haversine_direct(BCN, TGN)) < 0.01


def test_c_digest_mismatch(cfg, keys256, rng):
    a, b, m2, m3 = honest_m2_m3(cfg, keys256, rng)
    other = list(m2.ea_prime)
    other[0], other[1] = other[1], other[0]
    payload = signing_payload(cfg, other)
    m4 = M4(cfg.session_id, payload_digest(cfg, other),
            groups.sign(cfg.group, keys256.p2_sig, payload, rng))
    with pytest.raises(ProtocolError) as exc:
        c_process(cfg, m3, m4, keys256.c_keys)
    assert exc.value.reason == DIGEST_MISMATCH and exc.value.role == C


def test_c_bad_signature_p1_on_flipped_byte(cfg, keys256, rng):
    _, b, m2, m3 = honest_m2_m3(cfg, keys256, rng)
    m4 = b.on_m2(m2)
    raw = bytearray(m3.ea_prime[2].to_bytes(cfg.group))
    raw[-1] ^= 0x04
    ea = list(m3.ea_prime)
    ea[2] = Ciphertext.from_bytes(cfg.group, bytes(raw))
    with pytest.raises(ProtocolError) as exc:
        c_process(cfg, dataclasses.replace(m3, ea_prime=tuple(ea)), m4, keys256.c_keys)
    assert exc.value.reason == BAD_SIGNATURE_P1


def test_c_bad_signature_p2(cfg, keys256, rng):
    _, b, m2, m3 = honest_m2_m3(cfg, keys256, rng)
    m4 = b.on_m2(m2)
    forged = dataclasses.replace(m4, sig_p2=groups.sign(cfg.group, keys256.p1_sig,
                                                        signing_payload(cfg, m2.ea_prime), rng))
    with pytest.raises(ProtocolError) as exc:
        c_process(cfg, m3, forged, keys256.c_keys)
    assert exc.value.reason == BAD_SIGNATURE_P2


def test_c_rejects_cross_session_replay(cfg, keys256, rng):
    _, b, m2, m3 = honest_m2_m3(cfg, keys256, rng)
    m4 = b.on_m2(m2)
    other_cfg = dataclasses.replace(cfg, session_id=b"s2")
    with pytest.raises(ProtocolError) as exc:
        c_process(other_cfg, m3, m4, keys256.c_keys)
    assert exc.value.reason == SESSION_MISMATCH
    # relabelled messages still fail: the signatures cover the session id
    relabel = dataclasses.replace(m3, session=b"s2")
    with pytest.raises(ProtocolError) as exc:
        c_process(other_cfg, relabel, dataclasses.replace(m4, session=b"s2"), keys256.c_keys)
    assert exc.value.reason == BAD_SIGNATURE_P1


def test_control_center_accepts_either_order(cfg, keys256, rng):
    _, b, m2, m3 = honest_m2_m3(cfg, keys256, rng)
    m4 = b.on_m2(m2)
    c1 = ControlCenter(cfg, keys256.c_keys)
    assert c1.receive(m4) is None
    first = c1.receive(m3)
    c2 = ControlCenter(cfg, keys256.c_keys)
    assert c2.receive(m3) is None
    assert c2.receive(m4) == first


def test_control_center_key_mismatch(cfg, g256, rng):
    wrong = groups.keygen(g256, rng)
    with pytest.raises(ValueError):
        ControlCenter(cfg, wrong)


# -- finalize ---------------------------------------------------------------

def test_finalize_anchors(cfg):
    S = 123456789
    s5 = cfg.codec.term_scale
    assert finalize(cfg, M5(b"", -s5 // 2 + S), S) == 0.0
    assert finalize(cfg, M5(b"", s5 // 2 + S), S) == pytest.approx(math.pi * 6371.0)
    with pytest.raises(ProtocolError) as exc:
        finalize(cfg, M5(b"", s5 + S), S)
    assert exc.value.reason == CORRUPTED_RUN


# -- sessions ---------------------------------------------------------------

def test_session_coincident_small_scale(cfg, keys256, rng):
    # at F = 1e12 fixed-point noise in a ~ 1e-12 shows up as metres near d = 0
    d1, d2 = run_session(cfg, BCN, BCN, InMemoryTransport(cfg.group), keys256, rng)
    assert d1 == d2
    assert d1 < 0.015


def test_session_coincident_default_scale(rng):
    from privdist import generate_session_keys, load_standard_group

    grp = load_standard_group("test-512")
    keys = generate_session_keys(grp, rng)
    cfg = make_config(grp, keys, n=6)
    assert cfg.codec.scale == 10**18
    for pt in (BCN, TGN, GeoPoint(0.0, 0.0), GeoPoint(-1.2, 3.0)):
        d1, d2 = run_session(cfg, pt, pt, InMemoryTransport(grp), keys, rng)
        assert d1 == d2
        assert d1 < 1e-3


def test_session_barcelona_tarragona(cfg, keys256, rng):
    transport = InMemoryTransport(cfg.group)
    session = Session(cfg, BCN, TGN, keys256, rng)
    d1, d2 = session.run(transport)
    oracle = chord_distance(BCN.lat, BCN.lon, TGN.lat, TGN.lon)
    assert oracle == pytest.approx(83.10399949181473, abs=1e-9)
    assert d1 == d2
    assert abs(d1 - oracle) < 0.010
    assert transport.transmissions == 5
    assert [entry[2] for entry in transport.log] == ["M1", "M2", "M3", "M4", "M5"]
    n = cfg.n
    assert session.counters[P1].count == 8 + 2 * (n - 3) + 1
    assert session.counters[P2].count == 8 + 2 * (n - 3) + 1
    assert session.counters[C].count == n + 6


def test_session_random_pairs(cfg, keys256):
    r = random.Random(77)
    for _ in range(20):
        p1 = GeoPoint(r.uniform(-1.5, 1.5), r.uniform(-3.1, 3.1))
        p2 = GeoPoint(r.uniform(-1.5, 1.5), r.uniform(-3.1, 3.1))
        d1, d2 = run_session(cfg, p1, p2, InMemoryTransport(cfg.group), keys256, r)
        assert d1 == d2
        assert abs(d1 - chord_distance(p1.lat, p1.lon, p2.lat, p2.lon)) < 0.010


def test_session_rogue_masks_abort(cfg, keys256, rng):
    def tamper(src, dst, msg):
        if isinstance(msg, M2):
            v, r = msg.masks_plain[0]
            return dataclasses.replace(msg, masks_plain=((-v, r),) + msg.masks_plain[1:])
        return msg

    transport = InMemoryTransport(cfg.group, tamper)
    with pytest.raises(ProtocolError) as exc:
        run_session(cfg, BCN, TGN, transport, keys256, rng)
    assert exc.value.reason == REJECT_TAMPERED and exc.value.role == P2
    assert "M4" not in [entry[2] for entry in transport.log]
    assert transport.transmissions == 3


def test_session_seeded_reproducible(cfg, keys256):
    runs = []
    for _ in range(2):
        t = InMemoryTransport(cfg.group)
        Session(cfg, BCN, TGN, keys256, random.Random(5)).run(t)
        runs.append(list(t.mailboxes.values()) + [t.log])
    assert runs[0] == runs[1]


def test_unexpected_message(cfg, keys256, rng):
    a = Party1(cfg, BCN, keys256.p1_sig, rng)
    with pytest.raises(ProtocolError):
        a.on_m1(M5(cfg.session_id, 0))
    with pytest.raises(ProtocolError):
        a.on_m5(M5(cfg.session_id, 0))
    b = Party2(cfg, TGN, keys256.p2_sig, rng)
    with pytest.raises(ProtocolError):
        b.on_m2(M2(cfg.session_id, (), b.start().p2_ciphertexts, ()))
    assert isinstance(M3, type)
