"""The dihedral gate group on the Bloch sphere.

The group of order ``2j`` is generated by the rotation of the Bloch sphere
by ``2*pi/j`` about z and the X flip.  An element is labelled ``(z, x)``
and denotes the gate "rotate by ``2*pi*z/j``, after an X flip if ``x``",
i.e. the operator product R(z) X^x.

Because channels never see global phases, the group law closes exactly at
the Bloch level:

    (z1, x1) * (z2, x2) = (z1 + (-1)^x1 * z2 mod j, x1 xor x2)

with the left factor applied last.  The Liouville representation splits
into three blocks: the identity component (trivial), the XY plane (a 2D
rotation/reflection block), and the Z component (sign ``(-1)^x``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "GroupElement",
    "Irrep",
    "IRREP_DIMENSIONS",
    "IRREP_LIOUVILLE_INDICES",
    "group_elements",
    "pauli_element",
    "twirl",
    "DecayRates",
    "decay_params",
]


@dataclass(frozen=True)
class GroupElement:
    """An element of the order-``2j`` dihedral gate group.

    ``j`` is the group size parameter, ``z`` the rotation index mod ``j``,
    and ``x`` the flip bit.
    """

    j: int
    z: int
    x: int

    def __post_init__(self):
        if not (isinstance(self.j, int) and self.j >= 1):
            raise ValueError(f"group parameter j must be a positive integer, got {self.j!r}")
        if not (isinstance(self.z, int) and 0 <= self.z < self.j):
            raise ValueError(f"rotation index must satisfy 0 <= z < {self.j}, got {self.z!r}")
        if self.x not in (0, 1):
            raise ValueError(f"flip bit must be 0 or 1, got {self.x!r}")

    @classmethod
    def identity(cls, j: int) -> "GroupElement":
        return cls(j, 0, 0)

    def multiply(self, other: "GroupElement") -> "GroupElement":
        """Group product; ``other`` is applied first, then ``self``."""
        if self.j != other.j:
            raise ValueError(f"mismatched group parameters: {self.j} vs {other.j}")
        sign = 1 if self.x == 0 else -1
        return GroupElement(self.j, (self.z + sign * other.z) % self.j, self.x ^ other.x)

    def inverse(self) -> "GroupElement":
        if self.x == 0:
            return GroupElement(self.j, (-self.z) % self.j, 0)
        return self  # flips are involutions

    def superoperator(self) -> np.ndarray:
        """Liouville matrix: rotation/reflection on (X, Y), sign on Z."""
        theta = 2.0 * np.pi * self.z / self.j
        c, s = np.cos(theta), np.sin(theta)
        sign = -1.0 if self.x else 1.0
        out = np.eye(4)
        out[1, 1], out[1, 2] = c, -sign * s
        out[2, 1], out[2, 2] = s, sign * c
        out[3, 3] = sign
        return out


class Irrep(enum.Enum):
    """The three inequivalent irreducible blocks of the Liouville action."""

    TRIVIAL = "trivial"
    PLANE = "plane"
    PARITY = "parity"


IRREP_DIMENSIONS = {Irrep.TRIVIAL: 1, Irrep.PLANE: 2, Irrep.PARITY: 1}

#: Pauli-vector index set each block occupies: I, (X, Y), Z.
IRREP_LIOUVILLE_INDICES = {
    Irrep.TRIVIAL: (0,),
    Irrep.PLANE: (1, 2),
    Irrep.PARITY: (3,),
}


def group_elements(j: int):
    """All ``2j`` elements, rotation-major: (0,0), (0,1), (1,0), ..."""
    return [GroupElement(j, z, x) for z in range(j) for x in (0, 1)]


def pauli_element(j: int, b1: int, b2: int) -> GroupElement:
    """The group element realising X^b1 Z^b2.

    Z is the half turn, so ``b2 = 1`` needs even ``j``; odd groups simply
    do not contain Z and requesting it is a configuration error.
    """
    if b1 not in (0, 1) or b2 not in (0, 1):
        raise ValueError(f"b1 and b2 must be bits, got {(b1, b2)!r}")
    if b2 and j % 2:
        raise ValueError(f"Z is not an element of the odd group j = {j}; b2 must be 0")
    return GroupElement(j, (b2 * (j // 2)) % j, b1)


def twirl(e: np.ndarray, j: int) -> np.ndarray:
    """Group average ``(2j)^-1 sum_g g^-1 e g`` over all ``2j`` elements.

    This is the exact brute-force sum.  For ``j >= 3`` the result of
    twirling any trace-preserving channel is ``diag(1, p_xy, p_xy, p_z)``
    with the rates of :func:`decay_params`; any non-unital part of ``e``
    is killed by the flip half of the group.
    """
    e = np.asarray(e, dtype=float)
    acc = np.zeros((4, 4))
    for g in group_elements(j):
        gm = g.superoperator()
        acc += g.inverse().superoperator() @ e @ gm
    return acc / (2 * j)


class DecayRates(NamedTuple):
    """The two benchmarking decay rates read off a channel's diagonal."""

    z_decay: float
    xy_decay: float


def decay_params(e: np.ndarray) -> DecayRates:
    """Decay rates of a channel: ``(E[3,3], (E[1,1] + E[2,2]) / 2)``.

    The first rate governs the Z-component (parity) decay curve, the
    second the XY-plane curve.
    """
    e = np.asarray(e, dtype=float)
    return DecayRates(float(e[3, 3]), float((e[1, 1] + e[2, 2]) / 2.0))
