"""Acceptance criteria, one test per criterion.

A summary line per criterion is printed at the end of the pytest run.
"""

import math

import numpy as np
import pytest

import oracles
from ifmlab import scenarios
from ifmlab.amplitude import is_unitary, norm2
from ifmlab.engine import conditional, evolve_states, insert_measurement, postselect, sample
from ifmlab.errors import ParseError, ValidationError
from ifmlab.expformat import load, parse, parse_bytes, serialize
from ifmlab.optics import (
    Absorb,
    Basis,
    BeamSplitter,
    Circuit,
    Phase,
    Rotate,
    Swap,
    element_operator,
    validate,
)
from ifmlab.twostate import abl, presence, trace

criterion = pytest.mark.criterion


def close(got, want, tol):
    return abs(got - want) <= tol


@criterion(1, "bomb test distribution and dark port")
def test_ev_bomb():
    live = scenarios.ev_bomb_test("bomb").distribution()
    empty = scenarios.ev_bomb_test("absent").distribution()
    for k, v in {"explosion": 0.5, "D1": 0.25, "D2": 0.25}.items():
        assert close(live[k], v, 1e-12), k
    assert close(empty["D1"], 1, 1e-12) and close(empty["D2"], 0, 1e-12)


@criterion(2, "Hardy ten-outcome distribution against the path-sum oracle")
def test_hardy_distribution():
    dist = scenarios.hardy().distribution()
    labels = scenarios.hardy_labels()
    assert len(labels) == 10
    assert close(sum(dist[k] for k in labels), 1, 1e-10)
    o = oracles.hardy_distribution()
    assert close(o["annihilation"], 0.25, 1e-12)
    assert close(o[("D2", "D2")], 1 / 16, 1e-12)
    assert close(o[("D1", "D1")], 9 / 16, 1e-12)
    assert close(dist["annihilation"], 1 / 4, 1e-12)
    assert close(dist["bothD2"], 1 / 16, 1e-12)
    assert close(dist["bothD1"], 9 / 16, 1e-12)
    for p, q in scenarios.HARDY_PAIRS:
        assert close(dist[scenarios.hardy_label(p, q)], o.get((p, q), 0.0), 1e-12)


@criterion(3, "Hardy conditionals given both dark detectors, branch and ABL routes")
def test_hardy_conditionals():
    sc = scenarios.hardy()
    c, k = sc.circuit, sc.markers["meeting"]
    parts = scenarios.hardy_partitions(sc.basis)
    for which, label, want in (("particle", "W", 1.0), ("photon", "W", 1.0), ("joint", "WW", 0.0)):
        branch = conditional(insert_measurement(c, k, parts[which], sc.init, sc.detectors), "bothD2")
        rule = abl(c.slice(0, k), c.slice(k, c.n_stages), sc.init, parts[which], sc.detectors, "bothD2")
        assert close(branch[label], want, 1e-10), which
        assert close(rule[label], want, 1e-10), which
        assert all(close(branch[a], rule[a], 1e-10) for a in rule)


@criterion(4, "vanishing lower-arm presence and constant bridge")
def test_two_state():
    for sc in (scenarios.ev_bomb_test("bomb"), scenarios.wheeler("absent")):
        t = trace(sc.circuit, sc.init, sc.detectors, "D2")
        ref = t.bridge(0)
        for k in range(t.n_boundaries):
            assert abs(presence(t, "photon.lower", k)) <= 1e-12
            assert abs(t.bridge(k) - ref) <= 1e-12


@criterion(5, "Zeno closed form, monotone decrease and large-N bound")
def test_zeno():
    for n in (1, 2, 5, 10, 50):
        assert close(scenarios.zeno_ifm(n).p_explosion, scenarios.zeno_closed_form(n), 1e-12)
    values = [scenarios.zeno_closed_form(n) for n in range(1, 101)]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert scenarios.zeno_closed_form(1000) < 0.0025


@criterion(6, "negative-result projections and Dicke energy increase")
def test_negative_results():
    post, p = scenarios.renninger(4, {0}, np.full(4, 0.5))
    assert close(p, 0.75, 1e-15)
    assert np.max(np.abs(post - [0, *[3 ** -0.5] * 3])) <= 1e-15
    post, p = scenarios.renninger(3, {0}, [math.sqrt(0.5), 0.5, 0.5])
    assert close(p, 0.5, 1e-15)
    assert np.max(np.abs(post - [0, 0.5 ** 0.5, 0.5 ** 0.5])) <= 1e-15
    with pytest.raises(ArithmeticError):
        scenarios.renninger(4, range(4), np.full(4, 0.5))

    h = scenarios.well_hamiltonian(3)
    w, v = np.linalg.eigh(h)
    r = scenarios.dicke(v[:, 0], {0}, h)
    assert close(r.e_before, w[0], 1e-12)
    assert r.e_after - r.e_before > 0
    r = scenarios.dicke([0, 1, 0], {0, 2}, h)
    assert r.p_negative == 1 and np.array_equal(r.post, [0, 1, 0])


@criterion(7, "quantum object localized by a dark-port click, internal state untouched")
def test_quantum_object():
    sc = scenarios.ev_quantum_object()
    post, _ = postselect(sc.final_state(), sc.detectors, "D2")
    state = scenarios.particle_state(post, sc.basis, "d2")
    assert close(abs(state[0]) ** 2, 1, 1e-12)

    for chi in ((0.6, 0.8j), (1, 0), (0.28, -0.96)):
        sci = scenarios.ev_quantum_object(internal=chi)
        post, _ = postselect(sci.final_state(), sci.detectors, "D2")
        amps = np.array([post[sci.basis.index({"photon": "d2", "particle": m})]
                         for m in ("in0", "in1", "out0", "out1")])
        assert np.linalg.norm(amps[2:]) <= 1e-12
        overlap = np.vdot(np.array(chi, dtype=complex), amps[:2] / np.linalg.norm(amps[:2]))
        assert close(abs(overlap), 1, 1e-12)


def random_circuit(rng):
    n_modes = int(rng.integers(2, 7))
    modes = [f"m{i}" for i in range(n_modes)]
    basis = Basis.single("p", modes)
    stages = []
    for _ in range(int(rng.integers(1, 6))):
        free = list(rng.permutation(modes))
        stage = []
        while len(free) >= 2 and rng.random() < 0.8:
            kind = int(rng.integers(0, 5))
            a, b = free.pop(), free.pop()
            if kind == 0:
                stage.append(BeamSplitter(f"p.{a}", f"p.{b}", float(rng.random())))
            elif kind == 1:
                stage.append(Swap(f"p.{a}", f"p.{b}"))
            elif kind == 2:
                stage.append(Rotate(f"p.{a}", f"p.{b}", float(rng.uniform(-7, 7))))
            elif kind == 3:
                stage.append(Absorb(f"p.{a}", b, str(rng.choice(["bomb", "opaque", "dud"]))))
            else:
                stage.append(Phase(f"p.{a}", float(rng.uniform(-7, 7))))
                free.append(b)
        stages.append(stage)
    return Circuit(basis, stages)


@criterion(8, "unitarity and normalization over random circuits")
def test_unitarity_property():
    rng = np.random.default_rng(20261016)
    for _ in range(1000):
        c = random_circuit(rng)
        assert validate(c) == []
        for stage in c.stages:
            for e in stage:
                assert is_unitary(element_operator(e, c.basis), 1e-12)
        dim = c.basis.dim
        init = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        init /= math.sqrt(norm2(init))
        for s in evolve_states(c, init):
            assert abs(norm2(s) - 1) <= 1e-10


@criterion(9, "sampler frequencies within four sigma and seed reproducibility")
def test_sampler():
    dist = scenarios.ev_bomb_test("bomb").distribution()
    shots = 100_000
    counts = sample(dist, shots, 7)
    for k, p in dist.items():
        assert abs(counts[k] / shots - p) <= 4 * math.sqrt(p * (1 - p) / shots), k
    assert repr(sample(dist, shots, 7)) == repr(counts)


SHIPPED = ("ev-bomb", "hardy", "wheeler", "penrose")


@criterion(10, "parser round-trip, random-bytes fuzz and shipped files")
def test_parser(experiments_dir):
    files = sorted(experiments_dir.glob("*.exp"))
    assert files
    for f in files:
        doc = load(f)
        assert parse(serialize(doc)).close_to(doc), f.name
    for name in SHIPPED:
        got = load(experiments_dir / f"{name}.exp").to_scenario(name).distribution()
        want = scenarios.get(name).distribution()
        assert all(close(got[k], want[k], 1e-12) for k in want), name

    rng = np.random.default_rng(7)
    seeds = [f.read_bytes() for f in files]
    for case in range(10_000):
        if case % 2:
            data = rng.bytes(int(rng.integers(0, 64 * 1024 + 1)))
        else:
            # ASCII mutations of a valid file reach the later parser stages
            buf = bytearray(seeds[case // 2 % len(seeds)])
            for _ in range(int(rng.integers(1, 8))):
                buf[int(rng.integers(0, len(buf)))] = int(rng.integers(0, 128))
            data = bytes(buf)
        try:
            doc = parse_bytes(data)
        except ParseError as exc:
            assert exc.kind in ParseError.KINDS and exc.line >= 1
        except ValidationError as exc:
            assert exc.line is not None and exc.line >= 1
        else:
            assert validate(doc.circuit()) == []
