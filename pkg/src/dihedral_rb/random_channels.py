"""Random states, unitaries, and channels for verification suites.

These samplers back the brute-force oracles in the test and acceptance
suites: Haar averages, twirl closed forms, and the multiplicativity bound
are all checked against channels drawn here.
"""

from __future__ import annotations

import numpy as np

from .liouville import PAULIS, unitary_conjugation_superop

__all__ = [
    "haar_bloch_vectors",
    "random_unitary",
    "random_unitary_superop",
    "random_unital_superop",
    "random_cptp_superop",
]


def haar_bloch_vectors(n: int, rng: np.random.Generator) -> np.ndarray:
    """Bloch vectors of ``n`` Haar-random pure qubit states, shape (n, 3).

    Sampled as normalised complex Gaussian state vectors, not directly on
    the sphere, so the draw is Haar by construction.
    """
    psi = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    a, b = psi[:, 0], psi[:, 1]
    bx = 2.0 * np.real(np.conj(a) * b)
    by = 2.0 * np.imag(np.conj(a) * b)
    bz = np.abs(a) ** 2 - np.abs(b) ** 2
    return np.column_stack([bx, by, bz])


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    """A Haar-random 2x2 unitary (QR of a complex Ginibre matrix, phase fixed)."""
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_unitary_superop(rng: np.random.Generator) -> np.ndarray:
    return unitary_conjugation_superop(random_unitary(rng))


def random_unital_superop(rng: np.random.Generator, n_terms: int = 4) -> np.ndarray:
    """A random unital CPTP channel: a convex mixture of random unitaries."""
    weights = rng.dirichlet(np.ones(n_terms))
    out = np.zeros((4, 4))
    for w in weights:
        out += w * random_unitary_superop(rng)
    return out


def random_cptp_superop(rng: np.random.Generator, n_kraus: int = 4) -> np.ndarray:
    """A random CPTP channel, generically non-unital.

    Draws a Haar-random Stinespring isometry into ``n_kraus`` environment
    levels and reads off the Kraus operators.
    """
    g = rng.normal(size=(2 * n_kraus, 2)) + 1j * rng.normal(size=(2 * n_kraus, 2))
    q, _ = np.linalg.qr(g)
    kraus = [q[2 * i : 2 * i + 2, :] for i in range(n_kraus)]
    out = np.empty((4, 4))
    for j, pj in enumerate(PAULIS):
        for k, pk in enumerate(PAULIS):
            out[j, k] = np.real(
                sum(np.trace(pj @ km @ pk @ km.conj().T) for km in kraus)
            ) / 2.0
    return out
