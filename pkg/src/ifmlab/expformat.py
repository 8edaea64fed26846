"""Reader and writer for ``.exp`` experiment descriptions.

The format is line oriented. ``#`` starts a comment, blank lines are
ignored, and bracketed headers open sections::

    [system photon]          # one mode name per line
    a
    b
    [jointsinks]             # one joint sink label per line
    [init]                   # <spec> = <re>,<im>
    photon.b = 1,0
    [stage]                  # one element per line; one section per stage
    BS photon.a photon.b T=0.5
    [detect]                 # <label> = <spec>[, <spec> ...]
    D1 = photon.a
    [post]                   # a single outcome label
    D1

Element lines::

    BS <a> <b> T=<real>          PHASE <a> phi=<real>
    SWAP <a> <b>                 ROT <a> <b> theta=<real>
    ABSORB <a> -> <sink> kind=<bomb|opaque|dud>
    JOINT <a> <b> -> <joint sink>

A ``<spec>`` is ``system.mode`` (every basis element with that system in
that mode), a conjunction ``s1.m1&s2.m2`` or a joint sink label. Init lines
either all name single modes, giving a product of per-system states, or all
name full basis elements (one mode per system, or a joint sink). Reals are
decimals or ``pi``, ``pi/<int>`` with an optional sign.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import OTHER, DetectorMap
from .errors import ParseError, ValidationError
from .optics import (
    ABSORB_KINDS,
    Absorb,
    Basis,
    BeamSplitter,
    Circuit,
    JointSink,
    ModeLabel,
    Phase,
    Rotate,
    Swap,
    valid_name,
    validate,
)

#: Largest basis accepted from a file; dense operators beyond this are impractical.
MAX_DIM = 4096
INIT_TOL = 1e-9

_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_PI = re.compile(r"^([+-]?)pi(/(\d+))?$")


def parse_real(text: str, line: int) -> float:
    text = text.strip()
    m = _PI.match(text)
    if m:
        den = int(m.group(3)) if m.group(3) else 1
        if den == 0:
            raise ParseError("malformed-number", line, f"division by zero in {text!r}")
        v = math.pi / den
        return -v if m.group(1) == "-" else v
    if not _DECIMAL.match(text):
        raise ParseError("malformed-number", line, f"not a number: {text!r}")
    v = float(text)
    if not math.isfinite(v):
        raise ParseError("malformed-number", line, f"number out of range: {text!r}")
    return v


def format_real(x: float) -> str:
    s = f"{x:.15g}"
    return "0" if s == "-0" else s


def format_amplitude(z: complex) -> str:
    return f"{format_real(z.real)},{format_real(z.imag)}"


@dataclass
class ExperimentDoc:
    systems: list = field(default_factory=list)  # [(name, [mode, ...])]
    joint_sinks: list = field(default_factory=list)
    init: list = field(default_factory=list)  # [(spec, complex)]
    stages: list = field(default_factory=list)  # [[Element, ...]]
    detectors: list = field(default_factory=list)  # [(label, [spec, ...])]
    postselect: str | None = None

    def basis(self) -> Basis:
        return Basis(tuple((n, tuple(m)) for n, m in self.systems), tuple(self.joint_sinks))

    def circuit(self) -> Circuit:
        return Circuit(self.basis(), self.stages)

    def detector_map(self) -> DetectorMap:
        return DetectorMap.from_specs(self.basis(), self.detectors)

    def initial_state(self) -> np.ndarray:
        return _init_state(self.basis(), self.init)

    def to_scenario(self, name: str):
        from .scenarios import Scenario

        return Scenario(
            name, self.circuit(), self.initial_state(),
            tuple((lab, tuple(items)) for lab, items in self.detectors),
            post=self.postselect,
        )

    @classmethod
    def from_scenario(cls, sc) -> "ExperimentDoc":
        basis = sc.basis
        init = [
            (basis.element_label(i), complex(a))
            for i, a in enumerate(sc.init) if a != 0
        ]
        return cls(
            [(n, list(m)) for n, m in basis.systems],
            list(basis.joint_sinks),
            init,
            [list(s) for s in sc.circuit.stages],
            [(lab, list(items)) for lab, items in sc.detector_specs],
            sc.post,
        )

    def close_to(self, other: "ExperimentDoc", rel: float = 1e-13) -> bool:
        """Structural equality with numbers compared to ``rel`` relative tolerance."""

        def num(x, y):
            return math.isclose(x, y, rel_tol=rel, abs_tol=rel)

        def elem(e, f):
            if type(e) is not type(f):
                return False
            for k, v in vars(e).items():
                w = vars(f)[k]
                if isinstance(v, float):
                    if not num(v, w):
                        return False
                elif v != w:
                    return False
            return True

        return (
            self.systems == other.systems
            and self.joint_sinks == other.joint_sinks
            and self.detectors == other.detectors
            and self.postselect == other.postselect
            and [s for s, _ in self.init] == [s for s, _ in other.init]
            and all(num(a.real, b.real) and num(a.imag, b.imag)
                    for (_, a), (_, b) in zip(self.init, other.init))
            and len(self.stages) == len(other.stages)
            and all(len(s) == len(t) and all(map(elem, s, t))
                    for s, t in zip(self.stages, other.stages))
        )


def _spec_kind(spec: str, basis: Basis) -> str:
    """``joint``, ``mode`` (one system) or ``element`` (every system named)."""
    if spec in basis.joint_sinks:
        return "joint"
    n = spec.count("&") + 1
    if n == 1 and len(basis.systems) > 1:
        return "mode"
    return "element" if n == len(basis.systems) else "partial"


def _init_state(basis: Basis, entries) -> np.ndarray:
    kinds = {_spec_kind(s, basis) for s, _ in entries}
    state = np.zeros(basis.dim, dtype=complex)
    if kinds == {"mode"}:
        factors = {name: np.zeros(len(modes), dtype=complex) for name, modes in basis.systems}
        for spec, amp in entries:
            lab = ModeLabel.parse(spec)
            factors[lab.system][basis.local_index(lab)] = amp
        prod = np.ones(1, dtype=complex)
        for name in basis.system_names:
            prod = np.kron(prod, factors[name])
        state[: basis.product_dim] = prod
    else:
        for spec, amp in entries:
            (i,) = basis.resolve(spec)
            state[i] = amp
    return state


class _Parser:
    SECTIONS = ("system", "jointsinks", "init", "stage", "detect", "post")

    def __init__(self, text: str):
        self.text = text
        self.systems: list = []  # (name, [(mode, line)], header line)
        self.joint: list = []  # (label, line)
        self.init: list = []  # (text, line)
        self.stages: list = []  # [(text, line)]
        self.detect: list = []
        self.post: list = []
        self.seen_once: dict = {}

    def fail(self, kind, line, msg):
        raise ParseError(kind, line, msg)

    def split(self):
        current = None
        for n, raw in enumerate(self.text.split("\n"), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("["):
                if not line.endswith("]"):
                    self.fail("syntax", n, f"unterminated section header {line!r}")
                words = line[1:-1].split()
                if not words or words[0] not in self.SECTIONS:
                    self.fail("unknown-section", n, f"unknown section {line!r}")
                head = words[0]
                if head == "system":
                    if len(words) != 2 or not valid_name(words[1]):
                        self.fail("syntax", n, "expected [system <name>]")
                    if any(words[1] == s for s, _, _ in self.systems):
                        self.fail("duplicate-label", n, f"system {words[1]!r} declared twice")
                    self.systems.append((words[1], [], n))
                    current = self.systems[-1][1]
                    continue
                if len(words) != 1:
                    self.fail("syntax", n, f"[{head}] takes no arguments")
                if head == "stage":
                    self.stages.append([])
                    current = self.stages[-1]
                    continue
                if head in self.seen_once:
                    self.fail("syntax", n, f"[{head}] repeated (first on line {self.seen_once[head]})")
                self.seen_once[head] = n
                current = {"jointsinks": self.joint, "init": self.init,
                           "detect": self.detect, "post": self.post}[head]
                continue
            if current is None:
                self.fail("syntax", n, "content before the first section header")
            current.append((line, n))

    def build_basis(self) -> Basis:
        if not self.systems:
            self.fail("syntax", 1, "no [system] declared")
        systems = []
        for name, modes, header in self.systems:
            seen = {}
            for mode, n in modes:
                if not valid_name(mode):
                    self.fail("syntax", n, f"bad mode name {mode!r}")
                if mode in seen:
                    self.fail("duplicate-mode", n, f"mode {name}.{mode} already declared on line {seen[mode]}")
                seen[mode] = n
            if not modes:
                self.fail("syntax", header, f"system {name!r} declares no modes")
            systems.append((name, tuple(m for m, _ in modes)))
        seen = {}
        for label, n in self.joint:
            if not valid_name(label):
                self.fail("syntax", n, f"bad joint sink name {label!r}")
            if label in seen:
                self.fail("duplicate-label", n, f"joint sink {label!r} already declared")
            seen[label] = n
        basis = Basis(tuple(systems), tuple(label for label, _ in self.joint))
        if basis.dim > MAX_DIM:
            line = self.systems[-1][2]
            raise ValidationError(f"basis dimension {basis.dim} exceeds {MAX_DIM}", line=line)
        return basis

    def label(self, text, n, basis) -> ModeLabel:
        try:
            lab = ModeLabel.parse(text)
        except ValueError:
            self.fail("syntax", n, f"expected system.mode, got {text!r}")
        if not basis.has_mode(lab):
            self.fail("unresolved-label", n, f"undeclared mode {lab}")
        return lab

    def spec(self, text, n, basis):
        try:
            return basis.resolve(text)
        except (KeyError, ValueError):
            self.fail("unresolved-label", n, f"cannot resolve {text.strip()!r}")

    def keyed(self, tok, key, n) -> float:
        if not tok.startswith(key + "="):
            self.fail("syntax", n, f"expected {key}=<real>, got {tok!r}")
        return parse_real(tok[len(key) + 1:], n)

    def element(self, text, n, basis):
        tok = text.split()
        op = tok[0]
        shapes = {"BS": 4, "PHASE": 3, "SWAP": 3, "ROT": 4, "ABSORB": 5, "JOINT": 5}
        if op not in shapes:
            self.fail("syntax", n, f"unknown element {op!r}")
        if len(tok) != shapes[op]:
            self.fail("syntax", n, f"{op} takes {shapes[op] - 1} fields")
        if op == "BS":
            return BeamSplitter(self.label(tok[1], n, basis), self.label(tok[2], n, basis),
                                self.keyed(tok[3], "T", n))
        if op == "PHASE":
            return Phase(self.label(tok[1], n, basis), self.keyed(tok[2], "phi", n))
        if op == "SWAP":
            return Swap(self.label(tok[1], n, basis), self.label(tok[2], n, basis))
        if op == "ROT":
            return Rotate(self.label(tok[1], n, basis), self.label(tok[2], n, basis),
                          self.keyed(tok[3], "theta", n))
        if tok[-2 if op == "JOINT" else 2] != "->":
            self.fail("syntax", n, f"{op} needs '->' before the sink")
        if op == "ABSORB":
            a = self.label(tok[1], n, basis)
            if not tok[4].startswith("kind=") or tok[4][5:] not in ABSORB_KINDS:
                self.fail("syntax", n, f"expected kind=bomb|opaque|dud, got {tok[4]!r}")
            if not valid_name(tok[3]):
                self.fail("syntax", n, f"bad sink name {tok[3]!r}")
            if not basis.has_mode(ModeLabel(a.system, tok[3])):
                self.fail("unresolved-label", n, f"undeclared sink {a.system}.{tok[3]}")
            return Absorb(a, tok[3], tok[4][5:])
        if not basis.has_joint_sink(tok[4]):
            self.fail("unresolved-label", n, f"undeclared joint sink {tok[4]!r}")
        return JointSink(self.label(tok[1], n, basis), self.label(tok[2], n, basis), tok[4])

    def amplitude(self, text, n) -> complex:
        parts = text.split(",")
        if len(parts) != 2:
            self.fail("malformed-number", n, f"expected <re>,<im>, got {text.strip()!r}")
        return complex(parse_real(parts[0], n), parse_real(parts[1], n))

    def build_init(self, basis):
        if not self.init:
            self.fail("empty-init", self.seen_once.get("init", 1), "[init] has no entries")
        entries, lines, seen = [], [], {}
        for text, n in self.init:
            lhs, eq, rhs = text.partition("=")
            if not eq:
                self.fail("syntax", n, "expected <spec> = <re>,<im>")
            spec = lhs.strip()
            kind = _spec_kind(spec, basis)
            if kind == "partial":
                self.fail("syntax", n, "init entries must name one system or every system")
            idx = self.spec(spec, n, basis)
            if kind != "mode" and len(idx) != 1:
                self.fail("unresolved-label", n, f"{spec!r} is not a single basis element")
            if spec in seen:
                self.fail("duplicate-label", n, f"{spec!r} already set on line {seen[spec]}")
            seen[spec] = n
            entries.append((spec, self.amplitude(rhs, n)))
            lines.append(n)
        forms = [_spec_kind(s, basis) == "mode" for s, _ in entries]
        if len(set(forms)) > 1:
            self.fail("syntax", lines[forms.index(not forms[0])],
                      "init mixes per-system and full-element entries")
        kinds = {_spec_kind(s, basis) for s, _ in entries}
        # normalize per factor (product form) or globally
        if kinds == {"mode"}:
            groups = {}
            for (spec, _), n in zip(entries, lines):
                groups.setdefault(spec.split(".")[0], []).append(n)
            missing = [s for s in basis.system_names if s not in groups]
            if missing:
                self.fail("empty-init", lines[0], f"no init entries for system {missing[0]!r}")
        else:
            groups = {None: lines}
        scale = {}
        for key, ls in groups.items():
            norm = math.sqrt(sum(abs(a) ** 2 for (s, a), n in zip(entries, lines) if n in ls))
            if not math.isfinite(norm) or abs(norm - 1) > INIT_TOL:
                self.fail("init-not-normalized", ls[0], f"norm {norm!r} differs from 1 by more than {INIT_TOL}")
            scale[key] = norm
        out = []
        for spec, amp in entries:
            key = spec.split(".")[0] if kinds == {"mode"} else None
            out.append((spec, amp / scale[key]))
        return out

    def build_detect(self, basis):
        out, seen = [], {}
        for text, n in self.detect:
            lhs, eq, rhs = text.partition("=")
            label = lhs.strip()
            if not eq or not valid_name(label):
                self.fail("syntax", n, "expected <label> = <spec>[, ...]")
            if label == OTHER or label in seen:
                self.fail("duplicate-label", n, f"outcome label {label!r} reserved or repeated")
            seen[label] = n
            items = [i.strip() for i in rhs.split(",")]
            if not all(items):
                self.fail("syntax", n, "empty detector entry")
            for item in items:
                self.spec(item, n, basis)
            out.append((label, items))
        return out, seen

    def run(self) -> ExperimentDoc:
        self.split()
        basis = self.build_basis()
        init = self.build_init(basis)
        stages, stage_lines = [], []
        for body in self.stages:
            stages.append([self.element(t, n, basis) for t, n in body])
            stage_lines.append([n for _, n in body])
        circuit = Circuit(basis, stages)
        diags = validate(circuit)
        if diags:
            d = diags[0]
            line = stage_lines[d.stage][d.element]
            raise ValidationError(f"line {line}: {d.kind}: {d.message}", diags, line=line, kind=d.kind)
        detectors, det_lines = self.build_detect(basis)
        try:
            DetectorMap.from_specs(basis, detectors)
        except ValidationError as exc:
            line = next(iter(det_lines.values()), 1)
            raise ValidationError(f"line {line}: {exc}", line=line) from None
        post = None
        if len(self.post) > 1:
            self.fail("syntax", self.post[1][1], "[post] takes a single outcome label")
        if self.post:
            post, n = self.post[0]
            if post != OTHER and post not in det_lines:
                self.fail("unresolved-label", n, f"unknown outcome {post!r}")
        return ExperimentDoc(
            [(name, [m for m, _ in modes]) for name, modes, _ in self.systems],
            [label for label, _ in self.joint],
            init, stages, detectors, post,
        )


def parse(text: str) -> ExperimentDoc:
    """Parse experiment text. Raises ParseError or ValidationError, both carrying ``line``."""
    if text.startswith("\ufeff"):
        text = text[1:]
    return _Parser(text).run()


def parse_bytes(data: bytes) -> ExperimentDoc:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data[: exc.start].count(b"\n") + 1
        raise ParseError("encoding", line, "input is not valid UTF-8") from None
    return parse(text)


def load(path) -> ExperimentDoc:
    return parse_bytes(Path(path).read_bytes())


def _element_line(e) -> str:
    if isinstance(e, BeamSplitter):
        return f"BS {e.a} {e.b} T={format_real(e.T)}"
    if isinstance(e, Phase):
        return f"PHASE {e.a} phi={format_real(e.phi)}"
    if isinstance(e, Swap):
        return f"SWAP {e.a} {e.b}"
    if isinstance(e, Rotate):
        return f"ROT {e.a} {e.b} theta={format_real(e.theta)}"
    if isinstance(e, Absorb):
        return f"ABSORB {e.a} -> {e.sink} kind={e.kind}"
    if isinstance(e, JointSink):
        return f"JOINT {e.a} {e.b} -> {e.sink}"
    raise TypeError(f"not an element: {e!r}")


def serialize(doc: ExperimentDoc) -> str:
    out = []
    for name, modes in doc.systems:
        out += [f"[system {name}]", *modes, ""]
    if doc.joint_sinks:
        out += ["[jointsinks]", *doc.joint_sinks, ""]
    out += ["[init]", *(f"{s} = {format_amplitude(a)}" for s, a in doc.init), ""]
    for stage in doc.stages:
        out += ["[stage]", *map(_element_line, stage), ""]
    if doc.detectors:
        out += ["[detect]", *(f"{lab} = {', '.join(items)}" for lab, items in doc.detectors), ""]
    if doc.postselect is not None:
        out += ["[post]", doc.postselect, ""]
    return "\n".join(out)
