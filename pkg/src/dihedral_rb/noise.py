"""Error-channel specifications and gate-dependent noise assignment.

Errors are always composed *after* the ideal gate: the noisy implementation
of a gate ``G`` is ``error(G) o G``.  A :class:`GateNoiseMap` decides which
error channel each group element receives, which is how strongly
gate-dependent models (e.g. separate T-factor noise) are expressed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .dihedral import GroupElement, group_elements
from .liouville import Rotation, assert_cptp, avg_fidelity

__all__ = [
    "NoiseSpec",
    "no_noise",
    "depolarizing",
    "depolarizing_spec",
    "over_rotation_angle",
    "over_rotation_spec",
    "over_rotation_for_fidelity",
    "composed_spec",
    "GateNoiseMap",
]

_KINDS = ("none", "depolarizing", "over_rotation", "composed")


@dataclass(frozen=True)
class NoiseSpec:
    """Declarative description of an error channel.

    ``kind`` selects the model: "none", "depolarizing" (retention
    parameter ``p``), "over_rotation" (a unitary :class:`Rotation`), or
    "composed" (children applied in listed order, first listed first).
    """

    kind: str
    p: Optional[float] = None
    rotation: Optional[Rotation] = None
    children: tuple["NoiseSpec", ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "depolarizing":
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise ValueError(f"depolarizing parameter must lie in [0, 1], got {self.p!r}")
        if self.kind == "over_rotation" and self.rotation is None:
            raise ValueError("over_rotation noise needs a rotation")
        if self.kind == "composed" and not self.children:
            raise ValueError("composed noise needs at least one child")

    def superoperator(self) -> np.ndarray:
        if self.kind == "none":
            return np.eye(4)
        if self.kind == "depolarizing":
            return depolarizing(self.p)
        if self.kind == "over_rotation":
            return self.rotation.superoperator()
        out = np.eye(4)
        for child in self.children:  # first listed acts first
            out = child.superoperator() @ out
        return out


def no_noise() -> NoiseSpec:
    return NoiseSpec("none")


def depolarizing(p: float) -> np.ndarray:
    """The depolarizing channel ``diag(1, p, p, p)``.

    ``p`` is the Bloch-vector retention: 1 is the identity, 0 sends every
    state to the maximally mixed state.  Average fidelity is ``(1 + p) / 2``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing parameter must lie in [0, 1], got {p!r}")
    return np.diag([1.0, p, p, p])


def depolarizing_spec(p: Optional[float] = None, fidelity: Optional[float] = None) -> NoiseSpec:
    """Depolarizing noise by retention ``p`` or by target average fidelity."""
    if (p is None) == (fidelity is None):
        raise ValueError("give exactly one of p and fidelity")
    if fidelity is not None:
        p = 2.0 * fidelity - 1.0
    return NoiseSpec("depolarizing", p=float(p))


def over_rotation_angle(target_fidelity: float) -> float:
    """The unique rotation angle whose average fidelity is ``target_fidelity``.

    Inverts ``F = 1/2 + (1 + 2 cos(theta)) / 6``, i.e.
    ``theta = arccos(3 F - 2)``; defined for ``F`` in ``[1/3, 1]``.
    """
    arg = 3.0 * float(target_fidelity) - 2.0
    if not -1.0 <= arg <= 1.0:
        raise ValueError(
            f"no rotation has average fidelity {target_fidelity!r} (need F in [1/3, 1])"
        )
    return float(np.arccos(arg))


def over_rotation_spec(
    axis: Sequence[float],
    angle: Optional[float] = None,
    fidelity: Optional[float] = None,
) -> NoiseSpec:
    """Unitary over-rotation noise, by explicit angle or by target fidelity."""
    if (angle is None) == (fidelity is None):
        raise ValueError("give exactly one of angle and fidelity")
    if fidelity is not None:
        angle = over_rotation_angle(fidelity)
    return NoiseSpec("over_rotation", rotation=Rotation(tuple(axis), float(angle)))


def over_rotation_for_fidelity(axis: Sequence[float], target_fidelity: float) -> NoiseSpec:
    return over_rotation_spec(axis, fidelity=target_fidelity)


def composed_spec(*children: NoiseSpec) -> NoiseSpec:
    """Sequential composition of noise specs; the first argument acts first."""
    return NoiseSpec("composed", children=tuple(children))


class GateNoiseMap:
    """Assignment of an error channel to every gate of a dihedral group.

    Resolution order for an element ``(z, x)``:

    1. an exact per-element override, keyed ``(z, x)``;
    2. the ``t_coset`` spec, if set, for elements with odd rotation index
       (for even ``j`` these form the coset of the half-step rotation, e.g.
       the T-factor coset when ``j = 8``);
    3. the default spec.

    Instances are immutable after construction apart from an internal
    superoperator cache, so they are safe to share across workers.
    """

    def __init__(
        self,
        default: NoiseSpec,
        t_coset: Optional[NoiseSpec] = None,
        overrides: Optional[Mapping[tuple[int, int], NoiseSpec]] = None,
    ):
        self.default = default
        self.t_coset = t_coset
        self.overrides = dict(overrides or {})
        self._cache: dict[tuple[int, int, int], np.ndarray] = {}

    def resolve_spec(self, element: GroupElement) -> NoiseSpec:
        """The noise spec a gate receives (see class docstring for order)."""
        spec = self.overrides.get((element.z, element.x))
        if spec is not None:
            return spec
        if self.t_coset is not None and element.z % 2 == 1:
            return self.t_coset
        return self.default

    def resolve(self, element: GroupElement) -> np.ndarray:
        """The error superoperator applied after the given ideal gate."""
        key = (element.j, element.z, element.x)
        cached = self._cache.get(key)
        if cached is None:
            cached = self._cache[key] = self.resolve_spec(element).superoperator()
        return cached

    def validate(self, j: int, eig_tol: float = 1e-10) -> None:
        """Check the map against group ``j``: keys in range, channels CPTP.

        Raises ValueError for structural problems and
        :class:`~dihedral_rb.liouville.UnphysicalError` if any resolved
        channel fails the Choi positivity test.
        """
        if self.t_coset is not None and j % 2:
            raise ValueError(f"t_coset noise needs an even group parameter, got j = {j}")
        for z, x in self.overrides:
            GroupElement(j, z, x)  # raises if out of range
        for z in range(j):
            for x in (0, 1):
                assert_cptp(self.resolve(GroupElement(j, z, x)), eig_tol=eig_tol)

    def mean_gate_fidelity(self, j: int) -> float:
        """Average over the group of each resolved error's average fidelity."""
        fids = [avg_fidelity(self.resolve(g)) for g in group_elements(j)]
        return float(np.mean(fids))
