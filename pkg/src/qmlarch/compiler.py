"""Quantum Shannon Decomposition of a unitary into Ry/Rz/CNOT and a global phase.

Recursion: a 2**n unitary is split by a cosine-sine decomposition into two
select-controlled (n-1)-wire unitaries around a multiplexed Ry. Each
select-controlled pair is demultiplexed into v, a multiplexed Rz and w, and
the recursion continues on v and w until single-wire unitaries remain, which
are written in ZYZ form.

Gate lists are ordered in time: the first gate acts first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sim
from .errors import ConvergenceError, DimensionError, NotUnitaryError
from .linalg import (
    _square,
    dist_up_to_global_phase,
    eig_unitary,
    qr_decompose,
    svd,
    unitarity_residual,
)

ROTATIONS = ("RX", "RY", "RZ")
_ROT_MATRIX = {"RX": sim.rx_matrix, "RY": sim.ry_matrix, "RZ": sim.rz_matrix}

ELIDE_BELOW = 1e-12
VERIFY_TOL = 1e-8


def normalize_angle(angle: float) -> float:
    """Map an angle into (-2pi, 2pi] without changing the rotation matrix."""
    a = float(angle)
    if not math.isfinite(a):
        raise ValueError(f"non-finite rotation angle {angle!r}")
    if -2 * math.pi < a <= 2 * math.pi:
        return a
    a = math.remainder(a, 4 * math.pi)
    return 2 * math.pi if a <= -2 * math.pi else a


@dataclass(frozen=True)
class GateOp:
    kind: str
    wires: tuple
    angle: float | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        if kind in ROTATIONS:
            if len(self.wires) != 1 or self.angle is None:
                raise ValueError(f"{kind} needs one wire and an angle")
            object.__setattr__(self, "angle", normalize_angle(self.angle))
        elif kind == "CNOT":
            if len(self.wires) != 2 or self.wires[0] == self.wires[1]:
                raise ValueError(f"CNOT needs two distinct wires, got {self.wires}")
            if self.angle is not None:
                raise ValueError("CNOT takes no angle")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")

    @classmethod
    def rot(cls, axis: str, wire: int, angle: float) -> "GateOp":
        return cls(axis, (wire,), angle)

    @classmethod
    def cnot(cls, control: int, target: int) -> "GateOp":
        return cls("CNOT", (control, target))

    def remap(self, mapping) -> "GateOp":
        return GateOp(self.kind, tuple(mapping[w] for w in self.wires), self.angle)


@dataclass
class CompiledCircuit:
    n_wires: int
    gates: list = field(default_factory=list)
    global_phase: float = 0.0
    residual: float | None = None

    def __post_init__(self):
        for g in self.gates:
            if any(not 0 <= w < self.n_wires for w in g.wires):
                raise ValueError(f"gate {g} touches a wire outside 0..{self.n_wires - 1}")

    @property
    def cnot_count(self) -> int:
        return sum(g.kind == "CNOT" for g in self.gates)

    def to_text(self) -> str:
        return circuit_to_text(self)


# ---------------------------------------------------------------------------
# circuit execution


def apply_gate(state, gate: GateOp, wire_map=None):
    wires = gate.wires if wire_map is None else tuple(wire_map[w] for w in gate.wires)
    if gate.kind == "CNOT":
        return sim.apply_cnot(state, *wires)
    return sim.apply_1q(state, _ROT_MATRIX[gate.kind](gate.angle), wires[0])


def apply_circuit(state, circuit: CompiledCircuit, wire_map=None):
    """Run the gate list on ``state`` (batched) and multiply in the global phase."""
    out = np.asarray(state, dtype=complex)
    for g in circuit.gates:
        out = apply_gate(out, g, wire_map)
    return np.exp(1j * circuit.global_phase) * out


def reconstruct(circuit: CompiledCircuit) -> np.ndarray:
    """Dense matrix implemented by the circuit, global phase included."""
    dim = 1 << circuit.n_wires
    # row i of the batch is U e_i, i.e. column i of U
    cols = apply_circuit(np.eye(dim, dtype=complex), circuit)
    return cols.T.copy()


# ---------------------------------------------------------------------------
# building blocks


def _require_unitary(u, tol=1e-8):
    res = unitarity_residual(u)
    if res > tol:
        raise NotUnitaryError(f"input is not unitary (residual {res:.3e})", residual=res)


def zyz_decompose(u):
    """Angles (alpha, beta, gamma, delta) with u = e^{i alpha} Rz(beta) Ry(gamma) Rz(delta).

    gamma is in [0, pi].
    """
    u = _square(u)
    if u.shape != (2, 2):
        raise DimensionError("zyz_decompose expects a 2x2 matrix")
    _require_unitary(u)
    det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    alpha = 0.5 * np.angle(det)
    v = np.exp(-1j * alpha) * u
    gamma = 2.0 * math.atan2(abs(v[1, 0]), abs(v[0, 0]))
    half_sum = np.angle(v[1, 1])
    half_diff = np.angle(v[1, 0])
    beta = half_sum + half_diff
    delta = half_sum - half_diff
    return float(alpha), float(beta), float(gamma), float(delta)


def _orthonormalize(a):
    return qr_decompose(a).first


def _split_index(c):
    """Index splitting cosines into >1/sqrt2 and the rest, nudged to sit in a gap."""
    h = len(c)
    k0 = int(np.sum(c > 1 / math.sqrt(2)))

    def ok(k):
        return k in (0, h) or c[k - 1] - c[k] > 1e-6

    for d in range(h + 1):
        for k in (k0 - d, k0 + d):
            if 0 <= k <= h and ok(k):
                return k
    return k0


def cosine_sine_decompose(u):
    """Split u = (L1 + L2) CS (R1 + R2) where + is the direct sum.

    CS = [[C, -S], [S, C]] with C = diag(cos theta), S = diag(sin theta),
    theta in [0, pi/2] ascending.

    The shared right factor R1 is assembled from two SVDs so that each row is
    taken from whichever of the top-left or bottom-left block resolves it best:
    rows with a large cosine come from the bottom-left block's small singular
    values, the others from the top-left block's small ones.
    """
    u = _square(u)
    dim = u.shape[0]
    if dim < 4 or dim & (dim - 1):
        raise DimensionError("cosine_sine_decompose needs a 2**n x 2**n matrix with n >= 2")
    _require_unitary(u)
    h = dim // 2
    u00, u01, u10, u11 = u[:h, :h], u[:h, h:], u[h:, :h], u[h:, h:]

    wa, ca, va = svd(u00)
    wb, sb, vb = svd(u10)
    k = _split_index(ca)
    from_b = list(range(h - 1, h - 1 - k, -1))
    from_a = list(range(k, h))

    r1 = np.vstack([vb[:, from_b].conj().T, va[:, from_a].conj().T])
    r1 = _orthonormalize(r1.conj().T).conj().T
    x = u00 @ r1.conj().T
    y = u10 @ r1.conj().T
    cn = np.linalg.norm(x, axis=0)
    sn = np.linalg.norm(y, axis=0)
    thetas = np.arctan2(sn, cn)
    c, s = np.cos(thetas), np.sin(thetas)

    l1 = np.empty((h, h), dtype=complex)
    l2 = np.empty((h, h), dtype=complex)
    l1[:, :k] = x[:, :k] / cn[:k]
    l2[:, :k] = wb[:, from_b]
    l1[:, k:] = wa[:, from_a]
    l2[:, k:] = y[:, k:] / sn[k:]
    l1 = _orthonormalize(l1)
    l2 = _orthonormalize(l2)

    r2 = c[:, None] * (l2.conj().T @ u11) - s[:, None] * (l1.conj().T @ u01)
    r2 = _orthonormalize(r2.conj().T).conj().T
    return l1, l2, thetas, r1, r2


def cs_matrix(thetas) -> np.ndarray:
    c, s = np.diag(np.cos(thetas)), np.diag(np.sin(thetas))
    return np.block([[c, -s], [s, c]]).astype(complex)


def block_diag(a, b) -> np.ndarray:
    ha, hb = a.shape[0], b.shape[0]
    out = np.zeros((ha + hb, ha + hb), dtype=complex)
    out[:ha, :ha] = a
    out[ha:, ha:] = b
    return out


def demultiplex(u1, u2):
    """Write diag(u1, u2) as (I x v)(D + D^H)(I x w) with D = diag(exp(i * half_angles)).

    So u1 = v D w and u2 = v D^H w. v and D come from the eigendecomposition
    of u1 u2^H.
    """
    u1, u2 = _square(u1), _square(u2)
    if u1.shape != u2.shape:
        raise DimensionError("demultiplex needs equally sized blocks")
    _require_unitary(u1)
    _require_unitary(u2)
    v, phases = eig_unitary(u1 @ u2.conj().T)
    half = 0.5 * phases
    w = (np.exp(-1j * half)[:, None] * v.conj().T) @ u1
    return v, half, w


def _gray(i: int) -> int:
    return i ^ (i >> 1)


def multiplexed_rotation_circuit(axis: str, angles, select_wires, target: int) -> list:
    """Uniformly controlled rotation: R_axis(angles[p]) on ``target`` when the
    select wires read p (select_wires[0] is the most significant bit).

    Emits 2**k rotations alternating with 2**k CNOTs whose controls follow a
    cyclic Gray code, so every control wire toggles an even number of times.
    """
    axis = axis.upper()
    if axis not in ("RY", "RZ"):
        raise ValueError("multiplexed rotations are defined for RY and RZ")
    angles = np.asarray(angles, dtype=float)
    select_wires = list(select_wires)
    k = len(select_wires)
    if angles.shape != (1 << k,):
        raise DimensionError(f"need {1 << k} angles for {k} select wires, got {angles.shape}")
    if len(set(select_wires + [target])) != k + 1:
        raise ValueError("select and target wires must be distinct")
    if k == 0:
        return [GateOp.rot(axis, target, angles[0])]
    size = 1 << k
    gray = np.array([_gray(i) for i in range(size)])
    p = np.arange(size)
    parity = np.array([[bin(int(a) & int(b)).count("1") & 1 for b in gray] for a in p])
    signs = 1.0 - 2.0 * parity
    # rotation i sees the target flipped parity(p & gray_i) times for pattern p
    rot_angles = signs.T @ angles / size
    ops = []
    for i in range(size):
        ops.append(GateOp.rot(axis, target, rot_angles[i]))
        bit = (int(gray[i]) ^ int(gray[(i + 1) % size])).bit_length() - 1
        ops.append(GateOp.cnot(select_wires[k - 1 - bit], target))
    return ops


def multiplexor_matrix(axis: str, angles) -> np.ndarray:
    """Dense block-diagonal reference: select wires first, target last."""
    rot = _ROT_MATRIX[axis.upper()]
    blocks = [rot(a) for a in angles]
    size = 2 * len(blocks)
    out = np.zeros((size, size), dtype=complex)
    for p, b in enumerate(blocks):
        out[2 * p:2 * p + 2, 2 * p:2 * p + 2] = b
    return out


# ---------------------------------------------------------------------------
# QSD


def max_cnots(n: int) -> int:
    """CNOT bound c(n) = 4 c(n-1) + 3 * 2**(n-1), c(1) = 0."""
    c = 0
    for k in range(2, n + 1):
        c = 4 * c + 3 * (1 << (k - 1))
    return c


def _qsd(u, wires, gates) -> float:
    if len(wires) == 1:
        alpha, beta, gamma, delta = zyz_decompose(u)
        w = wires[0]
        gates += [GateOp.rot("RZ", w, delta), GateOp.rot("RY", w, gamma), GateOp.rot("RZ", w, beta)]
        return alpha
    top, rest = wires[0], wires[1:]
    l1, l2, thetas, r1, r2 = cosine_sine_decompose(u)
    phase = 0.0
    # right factor acts first
    v, half, w = demultiplex(r1, r2)
    phase += _qsd(w, rest, gates)
    gates += multiplexed_rotation_circuit("RZ", -2.0 * half, rest, top)
    phase += _qsd(v, rest, gates)
    gates += multiplexed_rotation_circuit("RY", 2.0 * thetas, rest, top)
    v, half, w = demultiplex(l1, l2)
    phase += _qsd(w, rest, gates)
    gates += multiplexed_rotation_circuit("RZ", -2.0 * half, rest, top)
    phase += _qsd(v, rest, gates)
    return phase


def qsd_compile(u, verify: bool = True) -> CompiledCircuit:
    """Compile a 2**n unitary (1 <= n <= 8) into Ry/Rz/CNOT plus a global phase.

    Rotations with |angle| < 1e-12 are dropped; no other simplification is done.
    When ``verify`` is set the circuit is reconstructed and the exact-phase
    residual is stored on the result; a residual above 1e-8 raises.
    """
    u = _square(u)
    dim = u.shape[0]
    n = dim.bit_length() - 1
    if 1 << n != dim or not 1 <= n <= 8:
        raise DimensionError(f"qsd_compile needs 2**n x 2**n with 1 <= n <= 8, got {u.shape}")
    _require_unitary(u)
    gates: list = []
    phase = _qsd(u, list(range(n)), gates)
    gates = [g for g in gates if g.kind == "CNOT" or abs(g.angle) >= ELIDE_BELOW]
    phase = math.remainder(phase, 2 * math.pi)
    circuit = CompiledCircuit(n, gates, phase)
    if verify:
        rec = reconstruct(circuit)
        circuit.residual = float(np.linalg.norm(rec - u))
        if circuit.residual > VERIFY_TOL:
            raise ConvergenceError(
                f"compiled circuit misses the target by {circuit.residual:.3e}",
                residual=circuit.residual,
            )
    return circuit


def verification_report(circuit: CompiledCircuit, u) -> dict:
    rec = reconstruct(circuit)
    return {
        "n_wires": circuit.n_wires,
        "gates": len(circuit.gates),
        "cnots": circuit.cnot_count,
        "cnot_bound": max_cnots(circuit.n_wires),
        "residual": float(np.linalg.norm(rec - u)),
        "residual_up_to_phase": dist_up_to_global_phase(rec, u),
    }


# ---------------------------------------------------------------------------
# text formats


def _fmt(x: float) -> str:
    return format(x, ".15g")


def circuit_to_text(circuit: CompiledCircuit) -> str:
    lines = [f"GPHASE {_fmt(circuit.global_phase)}"]
    for g in circuit.gates:
        if g.kind == "CNOT":
            lines.append(f"CNOT q{g.wires[0]} q{g.wires[1]}")
        else:
            lines.append(f"{g.kind} q{g.wires[0]} {_fmt(g.angle)}")
    return "\n".join(lines) + "\n"


def _wire(tok: str) -> int:
    if not tok.startswith("q"):
        raise ValueError(f"bad wire token {tok!r}")
    return int(tok[1:])


def circuit_from_text(text: str, n_wires: int | None = None) -> CompiledCircuit:
    phase = 0.0
    gates = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        op = parts[0].upper()
        try:
            if op == "GPHASE":
                phase = float(parts[1])
            elif op == "CNOT":
                gates.append(GateOp.cnot(_wire(parts[1]), _wire(parts[2])))
            elif op in ROTATIONS:
                gates.append(GateOp.rot(op, _wire(parts[1]), float(parts[2])))
            else:
                raise ValueError(f"unknown op {parts[0]!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    if n_wires is None:
        n_wires = 1 + max((w for g in gates for w in g.wires), default=0)
    return CompiledCircuit(n_wires, gates, phase)


def circuit_to_qasm(circuit: CompiledCircuit) -> str:
    lines = [
        "OPENQASM 2.0;",
        'include "qelib1.inc";',
        f"// global phase: {_fmt(circuit.global_phase)}",
        "// q[0] is the most significant bit of the matrix index",
        f"qreg q[{circuit.n_wires}];",
    ]
    for g in circuit.gates:
        if g.kind == "CNOT":
            lines.append(f"cx q[{g.wires[0]}],q[{g.wires[1]}];")
        else:
            lines.append(f"{g.kind.lower()}({_fmt(g.angle)}) q[{g.wires[0]}];")
    return "\n".join(lines) + "\n"
