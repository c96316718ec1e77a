"""Projection of a freely learned matrix back onto the unitary group."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .linalg import _square, polar_decompose, qr_decompose, schur_decompose, unitarity_residual


class MuMethod(str, enum.Enum):
    QR = "qr"
    SCHUR = "schur"
    POLAR = "polar"


@dataclass(frozen=True)
class MuConfig:
    method: MuMethod = MuMethod.SCHUR
    skip_if_unitary: bool = False
    unitary_tol: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "method", MuMethod(self.method))
        if not self.unitary_tol > 0:
            raise ValueError("unitary_tol must be positive")


def is_unitary(m, tol: float = 1e-9) -> bool:
    return unitarity_residual(_square(m)) <= tol


def unitarize(m, method: MuConfig | MuMethod | str = MuMethod.SCHUR) -> np.ndarray:
    """Keep the unitary factor of the chosen decomposition and drop the other.

    QR keeps Q, Schur keeps the Schur vectors, polar keeps U. With
    ``skip_if_unitary`` an input that already passes the unitarity check is
    returned as-is.
    """
    cfg = method if isinstance(method, MuConfig) else MuConfig(MuMethod(method))
    a = _square(m)
    if cfg.skip_if_unitary and is_unitary(a, cfg.unitary_tol):
        return np.asarray(m)
    if cfg.method is MuMethod.QR:
        return qr_decompose(a).first
    if cfg.method is MuMethod.SCHUR:
        return schur_decompose(a).first
    return polar_decompose(a).first
