"""Exact statevector simulation.

A state is a complex array whose last axis has length 2**n_wires; any leading
axes are treated as a batch. Wire 0 is the most significant bit of the
amplitude index, so reshaping the last axis to (2,)*n puts wire w on axis w.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError


def n_wires_of(state) -> int:
    dim = np.shape(state)[-1]
    n = dim.bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise DimensionError(f"state length {dim} is not a power of two")
    return n


def _check_wire(wire: int, n: int) -> None:
    if not 0 <= wire < n:
        raise DimensionError(f"wire {wire} out of range for {n} wires")


def basis_state(n_wires: int, basis_index: int) -> np.ndarray:
    dim = 1 << n_wires
    if not 0 <= basis_index < dim:
        raise IndexError(f"basis index {basis_index} out of range for {n_wires} wires")
    state = np.zeros(dim, dtype=complex)
    state[basis_index] = 1.0
    return state


def rx_matrix(phi: float) -> np.ndarray:
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry_matrix(phi: float) -> np.ndarray:
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(phi: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * phi), 0], [0, np.exp(0.5j * phi)]])


CNOT_MATRIX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)

PAULI_Z = np.diag([1.0, -1.0]).astype(complex)


def _split(state, n):
    batch = state.shape[:-1]
    return batch, state.reshape(batch + (2,) * n)


def apply_1q(state, gate, wire: int) -> np.ndarray:
    """Apply a 2x2 matrix to one wire."""
    state = np.asarray(state, dtype=complex)
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (2, 2):
        raise DimensionError(f"single-wire gate must be 2x2, got {gate.shape}")
    n = n_wires_of(state)
    _check_wire(wire, n)
    batch, t = _split(state, n)
    axis = len(batch) + wire
    t = np.moveaxis(np.tensordot(gate, t, axes=([1], [axis])), 0, axis)
    return t.reshape(state.shape)


def apply_cnot(state, control: int, target: int) -> np.ndarray:
    """Flip ``target`` on the amplitudes whose ``control`` bit is 1."""
    state = np.asarray(state, dtype=complex)
    n = n_wires_of(state)
    _check_wire(control, n)
    _check_wire(target, n)
    if control == target:
        raise ValueError("CNOT control and target must differ")
    batch, t = _split(state, n)
    off = len(batch)
    out = t.copy()
    sel = [slice(None)] * t.ndim
    sel[off + control] = 1
    sub = out[tuple(sel)]
    # target axis index shifts down by one if it sat after the removed control axis
    taxis = off + target - (1 if target > control else 0)
    out[tuple(sel)] = np.flip(sub, axis=taxis)
    return out.reshape(state.shape)


def apply_matrix(state, m, wires) -> np.ndarray:
    """Apply a 2**k x 2**k matrix on the listed wires (list order = MSB first).

    ``m`` need not be unitary.
    """
    state = np.asarray(state, dtype=complex)
    m = np.asarray(m, dtype=complex)
    wires = list(wires)
    k = len(wires)
    if len(set(wires)) != k:
        raise ValueError(f"duplicate wires in {wires}")
    if m.shape != (1 << k, 1 << k):
        raise DimensionError(f"matrix shape {m.shape} does not match {k} wires")
    n = n_wires_of(state)
    for w in wires:
        _check_wire(w, n)
    batch, t = _split(state, n)
    off = len(batch)
    axes = [off + w for w in wires]
    mt = m.reshape((2,) * (2 * k))
    t = np.tensordot(mt, t, axes=(list(range(k, 2 * k)), axes))
    t = np.moveaxis(t, list(range(k)), axes)
    return t.reshape(state.shape)


def z_signs(n_wires: int) -> np.ndarray:
    """(2**n, n) table of +1/-1: +1 where the wire's bit is 0."""
    idx = np.arange(1 << n_wires)
    bits = (idx[:, None] >> (n_wires - 1 - np.arange(n_wires))[None, :]) & 1
    return 1.0 - 2.0 * bits


def expectation_z(state, wire: int):
    """Raw bilinear form psi^H Z_wire psi (no renormalization)."""
    state = np.asarray(state)
    n = n_wires_of(state)
    _check_wire(wire, n)
    probs = state.real ** 2 + state.imag ** 2
    return probs @ z_signs(n)[:, wire]


def expectation_z_all(state) -> np.ndarray:
    """Pauli-Z expectation on every wire; shape batch + (n,)."""
    state = np.asarray(state)
    n = n_wires_of(state)
    probs = state.real ** 2 + state.imag ** 2
    return probs @ z_signs(n)


def product_state(singles) -> np.ndarray:
    """Tensor product of per-wire 2-vectors; ``singles`` has shape batch + (n, 2)."""
    singles = np.asarray(singles)
    out = singles[..., 0, :]
    for w in range(1, singles.shape[-2]):
        out = (out[..., :, None] * singles[..., w, None, :]).reshape(out.shape[:-1] + (-1,))
    return out


def ry_encode(angles) -> np.ndarray:
    """Ry(angle_w)|0> on every wire, as a product statevector."""
    angles = np.asarray(angles, dtype=float)
    singles = np.stack([np.cos(angles / 2), np.sin(angles / 2)], axis=-1)
    return product_state(singles.astype(complex))


def embed_1q(gate, wire: int, n_wires: int) -> np.ndarray:
    """Dense 2**n matrix of a single-wire gate (reference construction)."""
    ops = [np.eye(2, dtype=complex)] * n_wires
    ops[wire] = np.asarray(gate, dtype=complex)
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


def embed_cnot(control: int, target: int, n_wires: int) -> np.ndarray:
    """Dense permutation matrix of CNOT(control, target) (reference construction)."""
    dim = 1 << n_wires
    out = np.zeros((dim, dim), dtype=complex)
    cbit = 1 << (n_wires - 1 - control)
    tbit = 1 << (n_wires - 1 - target)
    for i in range(dim):
        j = i ^ tbit if i & cbit else i
        out[j, i] = 1.0
    return out
