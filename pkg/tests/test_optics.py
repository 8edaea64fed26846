import itertools
import math

import numpy as np
import pytest

from ifmlab.amplitude import is_unitary
from ifmlab.errors import ValidationError
from ifmlab.optics import (
    Absorb,
    Basis,
    BeamSplitter,
    Circuit,
    JointSink,
    ModeLabel,
    Phase,
    Rotate,
    Swap,
    circuit_operator,
    element_operator,
    validate,
)
from ifmlab.scenarios import ev_bomb_test, wheeler

TWO = Basis.single("p", ["a", "b"])


def test_mode_label_parse():
    assert ModeLabel.parse("photon.upper") == ModeLabel("photon", "upper")
    assert str(ModeLabel("photon", "d2")) == "photon.d2"
    for bad in ["photon", "photon.", ".x", "a.b.c", "a b.c"]:
        with pytest.raises(ValueError):
            ModeLabel.parse(bad)


def test_basis_index_layout():
    b = Basis((("x", ["0", "1"]), ("y", ["p", "q", "r"])), ("S",))
    assert b.dim == 7
    assert b.index(["1", "q"]) == 1 * 3 + 1
    assert b.index({"y": "r", "x": "0"}) == 2
    assert b.joint_index("S") == 6
    assert b.cylinder("y.q") == {1, 4}
    assert b.resolve("x.1&y.p") == {3}
    assert b.resolve("S") == {6}
    assert [b.element_label(i) for i in (0, 5, 6)] == ["x.0&y.p", "x.1&y.r", "S"]
    assert sorted(map(b.element_label, range(7))) == sorted(set(b.labels()))


def test_basis_rejects_duplicates():
    with pytest.raises(ValidationError):
        Basis.single("p", ["a", "a"])
    with pytest.raises(ValidationError):
        Basis((("p", ["a"]), ("p", ["b"])))
    with pytest.raises(ValidationError):
        Basis.single("p", ["a.b"])


def test_beam_splitter_convention():
    op = element_operator(BeamSplitter("p.a", "p.b", 0.5), TWO)
    np.testing.assert_allclose(op, np.array([[1, 1j], [1j, 1]]) / math.sqrt(2), atol=1e-16)


def test_dud_is_identity():
    b = Basis.single("p", ["a", "sink"])
    np.testing.assert_array_equal(element_operator(Absorb("p.a", "sink", "dud"), b), np.eye(2))


def test_bomb_swaps_into_sink():
    b = Basis.single("p", ["a", "sink"])
    np.testing.assert_array_equal(element_operator(Absorb("p.a", "sink", "bomb"), b), [[0, 1], [1, 0]])


def test_phase_pi():
    b = Basis.single("p", ["a", "b", "c"])
    np.testing.assert_allclose(element_operator(Phase("p.a", math.pi), b), np.diag([-1, 1, 1]), atol=1e-15)


def test_rotate_is_real_orthogonal():
    op = element_operator(Rotate("p.a", "p.b", 0.3), TWO)
    np.testing.assert_allclose(op, [[math.cos(0.3), -math.sin(0.3)], [math.sin(0.3), math.cos(0.3)]])


def test_joint_sink_exchanges_product_element():
    b = Basis((("x", ["0", "1"]), ("y", ["0", "1"])), ("W",))
    op = element_operator(JointSink("x.1", "y.0", "W"), b)
    i, w = b.index(["1", "0"]), b.joint_index("W")
    assert op[w, i] == 1 and op[i, w] == 1 and op[i, i] == 0
    assert is_unitary(op)


def test_embedding_in_composite_acts_on_one_system():
    b = Basis((("x", ["0", "1"]), ("y", ["0", "1"])))
    op = element_operator(Swap("y.0", "y.1"), b)
    np.testing.assert_array_equal(op, np.kron(np.eye(2), [[0, 1], [1, 0]]))


def test_circuit_operator_empty_and_two_splitters():
    np.testing.assert_array_equal(circuit_operator(Circuit(TWO, [])), np.eye(2))
    bs = BeamSplitter("p.a", "p.b", 0.5)
    op = circuit_operator(Circuit(TWO, [[bs], [bs]]))
    # (1/2)[[1, i],[i, 1]]^2 = (1/2)[[0, 2i],[2i, 0]]
    np.testing.assert_allclose(op, [[0, 1j], [1j, 0]], atol=1e-15)


def test_tuned_dark_port():
    bs = BeamSplitter("p.a", "p.b", 0.5)
    out = circuit_operator(Circuit(TWO, [[bs], [bs]])) @ np.array([1, 0])
    assert abs(out[0]) ** 2 == 0.0 or abs(out[0]) ** 2 < 1e-30
    assert abs(out[1] - 1j) < 1e-15


def test_within_stage_order_irrelevant():
    b = Basis((("x", ["a", "b", "s"]), ("y", ["a", "b"])), ("W",))
    stage = [BeamSplitter("y.a", "y.b", 0.3), Absorb("x.a", "s"), Phase("x.b", 1.1)]
    ref = circuit_operator(Circuit(b, [stage]))
    for perm in itertools.permutations(stage):
        assert np.max(np.abs(circuit_operator(Circuit(b, [list(perm)])) - ref)) <= 1e-15


def test_splitter_argument_order_does_not_change_probabilities():
    b = Basis.single("p", ["a", "b", "c"])
    init = np.array([0.6, 0.0, 0.8])
    for T in (0.0, 0.2, 0.5, 1.0):
        fwd = Circuit(b, [[BeamSplitter("p.a", "p.b", T)], [BeamSplitter("p.b", "p.c", 0.7)]])
        rev = Circuit(b, [[BeamSplitter("p.b", "p.a", T)], [BeamSplitter("p.c", "p.b", 0.7)]])
        p1 = np.abs(circuit_operator(fwd) @ init) ** 2
        p2 = np.abs(circuit_operator(rev) @ init) ** 2
        np.testing.assert_allclose(p1, p2, atol=1e-15)


def test_validate_clean_scenarios():
    assert validate(ev_bomb_test("absent").circuit) == []
    assert validate(wheeler("present").circuit) == []


def test_validate_overlap():
    c = Circuit(TWO, [[BeamSplitter("p.a", "p.b"), Phase("p.a", 0.1)]])
    diags = validate(c)
    assert [(d.kind, d.stage, d.element) for d in diags] == [("overlap", 0, 1)]
    with pytest.raises(ValidationError):
        circuit_operator(c)


def test_validate_unknown_sink():
    c = Circuit(TWO, [[Absorb("p.a", "nowhere", "bomb")]])
    diags = validate(c)
    assert len(diags) == 1 and diags[0].kind == "unknown-label"
    assert "stage 1, element 1" in str(diags[0])


def test_validate_parameters():
    c = Circuit(TWO, [[BeamSplitter("p.a", "p.b", 1.5)], [Swap("p.a", "p.a")]])
    assert {d.kind for d in validate(c)} == {"bad-parameter", "degenerate"}


def test_joint_sink_needs_two_systems():
    b = Basis((("x", ["a"]), ("y", ["a"]), ("z", ["a"])), ("W",))
    c = Circuit(b, [[JointSink("x.a", "y.a", "W")]])
    assert [d.kind for d in validate(c)] == ["joint-sink-arity"]
