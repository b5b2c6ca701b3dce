"""Exact single-qubit channel algebra in the Pauli-Liouville picture.

Conventions used throughout the package:

* A channel is a real 4x4 matrix ``M`` with rows and columns indexed
  ``(I, X, Y, Z)`` and entries ``M[j, k] = Tr(P_j E(P_k)) / 2``, so the
  identity channel is the identity matrix and trace preservation means the
  first row is ``(1, 0, 0, 0)``.
* States and measurement effects are real 4-vectors of Pauli coefficients:
  ``rho = (c_I I + c_X X + c_Y Y + c_Z Z) / 2``.  A normalised state has
  ``c_I = 1`` and Bloch norm at most 1; an effect only needs
  ``0 <= E <= I``, i.e. ``c_I +/- |bloch|`` in ``[0, 2]``.
* Rotation angles are Bloch-sphere angles: a rotation by ``theta`` about
  the z axis maps X to ``cos(theta) X + sin(theta) Y``, so the T gate is
  ``theta = pi/4`` about z.
* Composition follows matrix order: ``compose(a, b)`` applies ``b`` first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "ATOL",
    "PAULI_LABELS",
    "PAULIS",
    "UnphysicalError",
    "Rotation",
    "rotation_superop",
    "unitary_conjugation_superop",
    "state_vector",
    "effect_vector",
    "compose",
    "apply",
    "expectation",
    "avg_fidelity",
    "fidelity_to_chi",
    "chi_to_fidelity",
    "choi_matrix",
    "is_trace_preserving",
    "is_unital",
    "is_cptp",
    "assert_cptp",
]

#: Default absolute tolerance for invariant checks; comfortable slack above
#: double-precision rounding for products of 4x4 matrices.
ATOL = 1e-12

PAULI_LABELS = ("I", "X", "Y", "Z")

_I2 = np.eye(2, dtype=complex)
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)

#: The single-qubit Pauli basis (I, X, Y, Z) as complex 2x2 matrices.
PAULIS = (_I2, _SX, _SY, _SZ)


class UnphysicalError(ValueError):
    """An input or intermediate value violates a physicality constraint."""


@dataclass(frozen=True)
class Rotation:
    """A Bloch-sphere rotation: unit axis and angle in radians.

    The axis must already be normalised (to within ``ATOL``); callers with
    unnormalised data should divide by the norm themselves so that silent
    renormalisation never hides a typo in an axis.
    """

    axis: tuple[float, float, float]
    angle: float

    def __post_init__(self):
        axis = tuple(float(a) for a in self.axis)
        if len(axis) != 3:
            raise ValueError(f"rotation axis must have 3 components, got {len(axis)}")
        norm = float(np.sqrt(sum(a * a for a in axis)))
        if abs(norm - 1.0) > ATOL:
            raise ValueError(f"rotation axis must be a unit vector, |axis| = {norm!r}")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "angle", float(self.angle))

    def superoperator(self) -> np.ndarray:
        """The channel that conjugates by this rotation's unitary."""
        n = np.asarray(self.axis)
        c, s = np.cos(self.angle), np.sin(self.angle)
        cross = np.array(
            [[0.0, -n[2], n[1]], [n[2], 0.0, -n[0]], [-n[1], n[0], 0.0]]
        )
        bloch = c * np.eye(3) + (1.0 - c) * np.outer(n, n) + s * cross
        out = np.eye(4)
        out[1:, 1:] = bloch
        return out


def rotation_superop(axis: Sequence[float], angle: float) -> np.ndarray:
    """Superoperator of a Bloch rotation about a unit ``axis`` by ``angle``."""
    return Rotation(tuple(axis), angle).superoperator()


def unitary_conjugation_superop(u: np.ndarray) -> np.ndarray:
    """Superoperator of conjugation by an explicit 2x2 unitary.

    This is the brute-force definition ``M[j, k] = Tr(P_j U P_k U^dag) / 2``
    and serves as the ground-truth oracle that pins down the sign
    conventions of :func:`rotation_superop` and the gate group.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {u.shape}")
    ud = u.conj().T
    out = np.empty((4, 4))
    for j, pj in enumerate(PAULIS):
        for k, pk in enumerate(PAULIS):
            out[j, k] = np.real(np.trace(pj @ u @ pk @ ud)) / 2.0
    return out


def state_vector(bloch: Sequence[float]) -> np.ndarray:
    """Pauli vector ``(1, bx, by, bz)`` of the state with the given Bloch vector.

    Raises :class:`UnphysicalError` for points outside the Bloch ball.
    """
    b = np.asarray(bloch, dtype=float)
    if b.shape != (3,):
        raise ValueError(f"Bloch vector must have 3 components, got shape {b.shape}")
    norm = float(np.linalg.norm(b))
    if norm > 1.0 + 1e-9:
        raise UnphysicalError(f"Bloch vector lies outside the Bloch ball: |b| = {norm!r}")
    return np.concatenate(([1.0], b))


def effect_vector(bloch: Sequence[float], weight: float = 1.0) -> np.ndarray:
    """Pauli vector of the effect ``(weight * I + bloch . sigma) / 2``.

    ``weight = 1`` with a unit Bloch vector is the projector onto the
    corresponding pure state.  Valid effects satisfy ``0 <= E <= I``.
    """
    b = np.asarray(bloch, dtype=float)
    if b.shape != (3,):
        raise ValueError(f"Bloch vector must have 3 components, got shape {b.shape}")
    norm = float(np.linalg.norm(b))
    if weight - norm < -1e-9 or weight + norm > 2.0 + 1e-9:
        raise UnphysicalError(
            f"effect eigenvalues outside [0, 1]: weight = {weight!r}, |b| = {norm!r}"
        )
    return np.concatenate(([float(weight)], b))


def compose(*ops: np.ndarray) -> np.ndarray:
    """Compose channels; the rightmost argument is applied first.

    ``compose(a, b)`` is the channel "apply b, then a", which is the plain
    matrix product ``a @ b``.
    """
    if not ops:
        raise ValueError("compose() needs at least one superoperator")
    out = np.asarray(ops[0], dtype=float)
    for op in ops[1:]:
        out = out @ np.asarray(op, dtype=float)
    return out


def apply(m: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Apply a channel to a Pauli vector."""
    return np.asarray(m, dtype=float) @ np.asarray(s, dtype=float)


def expectation(effect: np.ndarray, state: np.ndarray) -> float:
    """``Tr(E rho)`` for an effect and a state given as Pauli vectors.

    Normalised so that ``E = rho = |0><0|`` gives 1.  Values outside
    ``[0, 1]`` (beyond rounding slack) indicate an unphysical input and
    raise :class:`UnphysicalError`.
    """
    value = float(np.dot(effect, state)) / 2.0
    if value < -1e-9 or value > 1.0 + 1e-9:
        raise UnphysicalError(f"expectation value {value!r} outside [0, 1]")
    return value


def avg_fidelity(m: np.ndarray) -> float:
    """Average gate fidelity of a trace-preserving channel.

    For a qubit this is ``1/2 + (M[1,1] + M[2,2] + M[3,3]) / 6``, the
    closed form of the Haar average of ``<psi| E(psi) |psi>``.
    """
    m = np.asarray(m, dtype=float)
    return 0.5 + (m[1, 1] + m[2, 2] + m[3, 3]) / 6.0


def fidelity_to_chi(f: float) -> float:
    """Process-matrix identity-identity element from average fidelity.

    Qubit relation: ``chi00 = (3 F - 1) / 2``; exact inverse of
    :func:`chi_to_fidelity`.
    """
    f = float(f)
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"fidelity must lie in [0, 1], got {f!r}")
    return 1.5 * f - 0.5


def chi_to_fidelity(chi: float) -> float:
    """Average fidelity from the process-matrix identity-identity element."""
    return (2.0 * float(chi) + 1.0) / 3.0


def choi_matrix(m: np.ndarray) -> np.ndarray:
    """Choi matrix of a channel, normalised to unit trace for TP channels.

    ``J = (1/4) sum_jk M[j, k] P_j (x) P_k^T``; complete positivity of the
    channel is positive semidefiniteness of ``J``.
    """
    m = np.asarray(m, dtype=float)
    out = np.zeros((4, 4), dtype=complex)
    for j, pj in enumerate(PAULIS):
        for k, pk in enumerate(PAULIS):
            out += m[j, k] * np.kron(pj, pk.T)
    return out / 4.0


def is_trace_preserving(m: np.ndarray, tol: float = 1e-9) -> bool:
    m = np.asarray(m, dtype=float)
    return bool(np.max(np.abs(m[0] - np.array([1.0, 0, 0, 0]))) <= tol)


def is_unital(m: np.ndarray, tol: float = 1e-9) -> bool:
    m = np.asarray(m, dtype=float)
    return bool(np.max(np.abs(m[:, 0] - np.array([1.0, 0, 0, 0]))) <= tol)


def is_cptp(m: np.ndarray, eig_tol: float = 1e-10, tp_tol: float = 1e-9) -> bool:
    """Whether a superoperator is completely positive and trace preserving.

    Complete positivity is tested through the Choi spectrum, allowing
    eigenvalues down to ``-eig_tol`` to absorb rounding.
    """
    if not is_trace_preserving(m, tol=tp_tol):
        return False
    eigs = np.linalg.eigvalsh(choi_matrix(m))
    return bool(eigs.min() >= -eig_tol)


def assert_cptp(m: np.ndarray, eig_tol: float = 1e-10, tp_tol: float = 1e-9) -> None:
    """Raise :class:`UnphysicalError` unless ``m`` passes :func:`is_cptp`."""
    if not is_trace_preserving(m, tol=tp_tol):
        raise UnphysicalError(f"channel is not trace preserving: first row {np.asarray(m)[0]!r}")
    eigs = np.linalg.eigvalsh(choi_matrix(m))
    if eigs.min() < -eig_tol:
        raise UnphysicalError(f"channel is not completely positive: Choi eigenvalues {eigs!r}")
