import zlib

import numpy as np
import pytest

from ifmlab import scenarios
from ifmlab.engine import conditional, insert_measurement
from ifmlab.errors import ZeroProbabilityError
from ifmlab.scenarios import ev_bomb_test, hardy, hardy_partitions, wheeler
from ifmlab.twostate import abl, presence, trace


@pytest.mark.parametrize("sc", [ev_bomb_test("bomb"), wheeler("absent")], ids=["ev-bomb", "wheeler"])
def test_lower_arm_presence_vanishes(sc):
    t = trace(sc.circuit, sc.init, sc.detectors, "D2")
    assert t.n_boundaries == sc.circuit.n_stages + 1
    for k in range(t.n_boundaries):
        assert abs(presence(t, "photon.lower", k)) <= 1e-12


def test_wheeler_upper_arm_presence_nonzero():
    sc = wheeler("absent")
    t = trace(sc.circuit, sc.init, sc.detectors, "D2")
    assert abs(presence(t, "photon.upper", sc.markers["entry"])) == pytest.approx(2 ** -0.5, abs=1e-12)


@pytest.mark.parametrize("sc", [ev_bomb_test("bomb"), wheeler("absent"), hardy()],
                         ids=["ev-bomb", "wheeler", "hardy"])
def test_bridge_constant(sc):
    t = trace(sc.circuit, sc.init, sc.detectors, sc.post)
    ref = t.bridge(0)
    assert abs(ref) ** 2 == pytest.approx(t.post_probability, abs=1e-12)
    for k in range(t.n_boundaries):
        assert abs(t.bridge(k) - ref) <= 1e-12


def test_backward_starts_from_postselected_final():
    sc = ev_bomb_test("bomb")
    t = trace(sc.circuit, sc.init, sc.detectors, "D2")
    assert t.post_probability == pytest.approx(0.25, abs=1e-12)
    (d2,) = sc.basis.resolve("photon.d2")
    expected = np.zeros(sc.basis.dim, dtype=complex)
    expected[d2] = -1  # forward amplitude -1/2, renormalized
    np.testing.assert_allclose(t.backward[-1], expected, atol=1e-15)


def test_trace_zero_probability():
    sc = ev_bomb_test("absent")
    with pytest.raises(ZeroProbabilityError):
        trace(sc.circuit, sc.init, sc.detectors, "D2")


def test_presence_errors():
    sc = ev_bomb_test("bomb")
    t = trace(sc.circuit, sc.init, sc.detectors, "D2")
    with pytest.raises(KeyError):
        presence(t, "photon.nowhere", 0)
    with pytest.raises(IndexError):
        presence(t, "photon.lower", t.n_boundaries)


@pytest.mark.parametrize("which,expected", [("particle", 1.0), ("photon", 1.0), ("joint", 0.0)])
def test_hardy_abl_matches_branches(which, expected):
    sc = hardy()
    k = sc.markers["meeting"]
    parts = hardy_partitions(sc.basis)[which]
    c = sc.circuit
    a = abl(c.slice(0, k), c.slice(k, c.n_stages), sc.init, parts, sc.detectors, "bothD2")
    b = conditional(insert_measurement(c, k, parts, sc.init, sc.detectors), "bothD2")
    label = next(iter(parts))
    assert a[label] == pytest.approx(expected, abs=1e-10)
    for x in a:
        assert abs(a[x] - b[x]) <= 1e-12


def test_abl_zero_probability():
    sc = ev_bomb_test("absent")
    c = sc.circuit
    with pytest.raises(ZeroProbabilityError):
        abl(c.slice(0, 2), c.slice(2, c.n_stages), sc.init, {}, sc.detectors, "D2")


@pytest.mark.parametrize("name", [n for n in scenarios.names() if scenarios.get(n).post])
def test_abl_agrees_with_branches_everywhere(name):
    sc = scenarios.get(name)
    c, dim = sc.circuit, sc.basis.dim
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    for _ in range(5):
        k = int(rng.integers(0, c.n_stages + 1))
        labels = rng.integers(0, 3, size=dim)
        parts = {f"g{g}": np.flatnonzero(labels == g) for g in range(3)}
        try:
            b = conditional(insert_measurement(c, k, parts, sc.init, sc.detectors), sc.post)
        except ZeroProbabilityError:
            continue
        a = abl(c.slice(0, k), c.slice(k, c.n_stages), sc.init, parts, sc.detectors, sc.post)
        assert list(a) == list(b)
        for x in a:
            assert abs(a[x] - b[x]) <= 1e-10
