import math

import numpy as np
import pytest

from qmlarch import compiler as qc
from qmlarch import sim
from qmlarch.errors import DimensionError, NotUnitaryError
from qmlarch.linalg import dist_up_to_global_phase, random_unitary


def _zyz_matrix(alpha, beta, gamma, delta):
    return np.exp(1j * alpha) * sim.rz_matrix(beta) @ sim.ry_matrix(gamma) @ sim.rz_matrix(delta)


def _dense(circuit):
    """Reference: multiply dense embeddings gate by gate (independent of the simulator kernels)."""
    n = circuit.n_wires
    out = np.eye(1 << n, dtype=complex)
    rot = {"RX": sim.rx_matrix, "RY": sim.ry_matrix, "RZ": sim.rz_matrix}
    for g in circuit.gates:
        if g.kind == "CNOT":
            m = sim.embed_cnot(*g.wires, n)
        else:
            m = sim.embed_1q(rot[g.kind](g.angle), g.wires[0], n)
        out = m @ out
    return np.exp(1j * circuit.global_phase) * out


def test_zyz_examples():
    assert qc.zyz_decompose(np.eye(2)) == (0.0, 0.0, 0.0, 0.0)
    theta = 1.1
    np.testing.assert_allclose(qc.zyz_decompose(sim.ry_matrix(theta)), (0, 0, theta, 0), atol=1e-15)


def test_zyz_random(rng):
    for _ in range(200):
        u = random_unitary(2, rng)
        a, b, g, d = qc.zyz_decompose(u)
        assert 0 <= g <= math.pi
        assert np.linalg.norm(_zyz_matrix(a, b, g, d) - u) <= 1e-10


def test_zyz_diagonal_and_antidiagonal():
    for u in (sim.rz_matrix(0.4), np.array([[0, 1j], [1j, 0]]), np.diag([1j, 1])):
        assert np.linalg.norm(_zyz_matrix(*qc.zyz_decompose(u)) - u) <= 1e-12


def test_zyz_rejects_non_unitary():
    with pytest.raises(NotUnitaryError):
        qc.zyz_decompose(2 * np.eye(2))


def test_csd_block_diagonal_input(rng):
    a = random_unitary(4, rng)
    u = qc.block_diag(a, a)
    l1, l2, th, r1, r2 = qc.cosine_sine_decompose(u)
    np.testing.assert_allclose(th, 0, atol=1e-12)
    np.testing.assert_allclose(qc.block_diag(l1, l2) @ qc.cs_matrix(th) @ qc.block_diag(r1, r2), u, atol=1e-12)


def test_csd_ry_on_top_wire():
    phi = 0.9
    u = np.kron(sim.ry_matrix(phi), np.eye(4))
    l1, l2, th, r1, r2 = qc.cosine_sine_decompose(u)
    # expanding Ry(phi) x I gives [[cI, -sI], [sI, cI]] with c = cos(phi/2)
    np.testing.assert_allclose(th, phi / 2, atol=1e-14)
    # equal angles leave the sides free up to a shared unitary
    np.testing.assert_allclose(l1 @ r1, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(l2 @ r2, np.eye(4), atol=1e-12)


@pytest.mark.parametrize("phi", [np.pi / 2, np.pi, 2.5])
def test_csd_degenerate_angles(phi, rng):
    a, b = random_unitary(2, rng), random_unitary(2, rng)
    u = np.kron(np.eye(2), a) @ np.kron(sim.ry_matrix(phi), np.eye(2)) @ np.kron(np.eye(2), b)
    l1, l2, th, r1, r2 = qc.cosine_sine_decompose(u)
    np.testing.assert_allclose(th, phi / 2, atol=1e-12)
    assert np.linalg.norm(qc.block_diag(l1, l2) @ qc.cs_matrix(th) @ qc.block_diag(r1, r2) - u) <= 1e-9


@pytest.mark.parametrize("n", [2, 3, 4])
def test_csd_random(n):
    rng = np.random.default_rng(n)
    for _ in range(20):
        u = random_unitary(1 << n, rng)
        l1, l2, th, r1, r2 = qc.cosine_sine_decompose(u)
        assert np.all(th >= 0) and np.all(th <= np.pi / 2) and np.all(np.diff(th) >= 0)
        recon = qc.block_diag(l1, l2) @ qc.cs_matrix(th) @ qc.block_diag(r1, r2)
        assert np.linalg.norm(recon - u) <= 1e-9


def test_csd_rejects_small_input():
    with pytest.raises(DimensionError):
        qc.cosine_sine_decompose(np.eye(2))


def test_demultiplex_equal_blocks(rng):
    a = random_unitary(4, rng)
    v, half, w = qc.demultiplex(a, a)
    np.testing.assert_allclose(half, 0, atol=1e-14)
    np.testing.assert_allclose(v @ w, a, atol=1e-12)


def test_demultiplex_opposite_phases(rng):
    a = random_unitary(4, rng)
    phi = 0.3
    _, half, _ = qc.demultiplex(np.exp(1j * phi) * a, np.exp(-1j * phi) * a)
    np.testing.assert_allclose(half, phi, atol=1e-12)


def test_demultiplex_random(rng):
    for _ in range(20):
        u1, u2 = random_unitary(8, rng), random_unitary(8, rng)
        v, half, w = qc.demultiplex(u1, u2)
        d = np.diag(np.exp(1j * half))
        assert np.linalg.norm(v @ d @ w - u1) <= 1e-9
        assert np.linalg.norm(v @ d.conj() @ w - u2) <= 1e-9


def test_multiplexor_k0():
    ops = qc.multiplexed_rotation_circuit("RY", [0.4], [], 2)
    assert ops == [qc.GateOp.rot("RY", 2, 0.4)]


def test_multiplexor_k1_walsh_transform():
    theta = 0.8
    ops = qc.multiplexed_rotation_circuit("RY", [theta, theta], [0], 1)
    rots = [g.angle for g in ops if g.kind == "RY"]
    np.testing.assert_allclose(rots, [theta, 0.0], atol=1e-16)
    assert [g.kind for g in ops] == ["RY", "CNOT", "RY", "CNOT"]


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("axis", ["RY", "RZ"])
def test_multiplexor_matches_block_diagonal(k, axis, rng):
    angles = rng.uniform(-3, 3, 1 << k)
    ops = qc.multiplexed_rotation_circuit(axis, angles, list(range(k)), k)
    assert sum(g.kind == "CNOT" for g in ops) == 1 << k
    assert sum(g.kind == axis for g in ops) == 1 << k
    circ = qc.CompiledCircuit(k + 1, ops)
    np.testing.assert_allclose(_dense(circ), qc.multiplexor_matrix(axis, angles), atol=1e-12)


def test_multiplexor_with_target_on_top(rng):
    # target wire 0, selects (1, 2): check against the explicit per-pattern rotation
    angles = rng.uniform(-3, 3, 4)
    circ = qc.CompiledCircuit(3, qc.multiplexed_rotation_circuit("RY", angles, [1, 2], 0))
    u = qc.reconstruct(circ)
    for p in range(4):
        for b in range(2):
            col = u[:, (b << 2) | p]
            expect = np.zeros(8, dtype=complex)
            r = sim.ry_matrix(angles[p])
            expect[p] = r[0, b]
            expect[4 | p] = r[1, b]
            np.testing.assert_allclose(col, expect, atol=1e-13)


def test_multiplexor_length_mismatch():
    with pytest.raises(DimensionError):
        qc.multiplexed_rotation_circuit("RZ", [0.1, 0.2, 0.3], [0], 1)


def test_reconstruct_basics():
    np.testing.assert_array_equal(qc.reconstruct(qc.CompiledCircuit(2)), np.eye(4))
    c = qc.CompiledCircuit(2, [qc.GateOp.cnot(0, 1)])
    np.testing.assert_array_equal(qc.reconstruct(c), sim.CNOT_MATRIX)


def test_reconstruct_matches_dense_product(rng):
    u = random_unitary(8, rng)
    c = qc.qsd_compile(u)
    np.testing.assert_allclose(qc.reconstruct(c), _dense(c), atol=1e-12)


def test_max_cnots():
    assert [qc.max_cnots(n) for n in (1, 2, 3, 4)] == [0, 6, 36, 168]


def test_qsd_single_wire():
    theta = 0.9
    c = qc.qsd_compile(sim.ry_matrix(theta))
    assert c.cnot_count == 0
    assert c.gates == [qc.GateOp.rot("RY", 0, theta)]
    assert c.residual <= 1e-10


def test_qsd_cnot_matrix():
    c = qc.qsd_compile(sim.CNOT_MATRIX)
    assert np.linalg.norm(qc.reconstruct(c) - sim.CNOT_MATRIX) <= 1e-8
    assert c.cnot_count <= 6


def test_qsd_identity_and_structured():
    for u in (np.eye(16), np.kron(sim.ry_matrix(1.0), np.eye(8)), np.diag(np.exp(1j * np.arange(8)))):
        c = qc.qsd_compile(u)
        assert np.linalg.norm(qc.reconstruct(c) - u) <= 1e-10


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_qsd_round_trip(n):
    rng = np.random.default_rng(40 + n)
    for _ in range(10):
        u = random_unitary(1 << n, rng)
        c = qc.qsd_compile(u)
        rec = qc.reconstruct(c)
        assert dist_up_to_global_phase(rec, u) <= 1e-8
        assert np.linalg.norm(rec - u) <= 1e-8
        assert c.cnot_count <= qc.max_cnots(n)
        assert all(-2 * np.pi < g.angle <= 2 * np.pi for g in c.gates if g.angle is not None)


def test_qsd_behavioural_equivalence(rng):
    u = random_unitary(8, rng)
    c = qc.qsd_compile(u)
    states = rng.standard_normal((20, 8)) + 1j * rng.standard_normal((20, 8))
    np.testing.assert_allclose(
        qc.apply_circuit(states, c), sim.apply_matrix(states, u, [0, 1, 2]), atol=1e-8
    )


def test_qsd_rejects_bad_input():
    with pytest.raises(NotUnitaryError):
        qc.qsd_compile(2 * np.eye(4))
    with pytest.raises(DimensionError):
        qc.qsd_compile(np.eye(3))


def test_gate_validation_and_normalization():
    with pytest.raises(ValueError):
        qc.GateOp.cnot(1, 1)
    with pytest.raises(ValueError):
        qc.GateOp.rot("RY", 0, float("nan"))
    g = qc.GateOp.rot("RZ", 0, 5 * np.pi)
    assert -2 * np.pi < g.angle <= 2 * np.pi
    np.testing.assert_allclose(sim.rz_matrix(g.angle), sim.rz_matrix(5 * np.pi), atol=1e-14)
    assert qc.GateOp.rot("RY", 0, -2 * np.pi).angle == 2 * np.pi
    with pytest.raises(ValueError):
        qc.CompiledCircuit(1, [qc.GateOp.cnot(0, 1)])


def test_text_format_roundtrip(rng):
    c = qc.qsd_compile(random_unitary(4, rng))
    text = qc.circuit_to_text(c)
    lines = text.splitlines()
    assert lines[0].startswith("GPHASE ")
    assert all(l.split()[0] in ("RY", "RZ", "CNOT") for l in lines[1:])
    back = qc.circuit_from_text(text, 2)
    assert len(back.gates) == len(c.gates)
    assert np.linalg.norm(qc.reconstruct(back) - qc.reconstruct(c)) <= 1e-12


def test_text_format_layout():
    c = qc.CompiledCircuit(2, [qc.GateOp.rot("RY", 1, 0.1), qc.GateOp.cnot(0, 1), qc.GateOp.rot("RX", 0, 1.0)], 0.5)
    assert qc.circuit_to_text(c) == "GPHASE 0.5\nRY q1 0.1\nCNOT q0 q1\nRX q0 1\n"


def test_text_parse_errors():
    with pytest.raises(ValueError):
        qc.circuit_from_text("GPHASE 0\nFOO q0 1\n")
    with pytest.raises(ValueError):
        qc.circuit_from_text("RY 0 1\n")


def test_qasm_export():
    c = qc.CompiledCircuit(2, [qc.GateOp.rot("RY", 1, 0.25), qc.GateOp.cnot(0, 1)], 0.5)
    q = qc.circuit_to_qasm(c)
    assert q.startswith("OPENQASM 2.0;")
    assert "qreg q[2];" in q and "ry(0.25) q[1];" in q and "cx q[0],q[1];" in q
    assert "// global phase: 0.5" in q
