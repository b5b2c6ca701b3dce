"""Benchmarking sequence engine: sampling, survival, and decay datasets.

A standard experiment over the order-``2j`` group draws ``m`` uniform
gates, applies them with their assigned errors, applies the noisy
inversion gate that ideally returns the state to ``X^b1 Z^b2`` of itself,
and measures.  The interleaved variant inserts the half-step rotation of
the order-``4j`` supergroup (the T gate when ``j = 4``) after every random
gate; sequence lengths must then be even so the inversion stays inside the
benchmarked group.

Determinism contract: the gate draws and shot noise of sequence ``i`` at
length ``m`` come from a generator seeded by ``(seed, m, i)`` only, so
serial and parallel evaluation orders give bit-identical datasets.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dihedral import GroupElement, group_elements, pauli_element
from .liouville import UnphysicalError, expectation
from .noise import GateNoiseMap

__all__ = [
    "ExperimentPlan",
    "SequenceRecord",
    "DecayDataset",
    "sample_sequence",
    "build_record",
    "survival_exact",
    "survival_sampled",
    "exhaustive_pr",
    "estimate_pr",
    "decay_dataset",
]

_B_SETTINGS_EVEN = ((0, 0), (0, 1), (1, 0), (1, 1))
_B_SETTINGS_ODD = ((0, 0), (1, 0))

# Seed-stream domain tags; kept distinct so derived streams never collide.
_STREAM_SEQUENCE = 1
_STREAM_BOOTSTRAP = 2
_STREAM_REFERENCE = 3

#: Safety cap for exhaustive enumeration ((2j)^m sequences).
_EXHAUSTIVE_CAP = 10_000_000


def sequence_rng(seed: int, m: int, index: int) -> np.random.Generator:
    """The dedicated generator for sequence ``index`` at length ``m``."""
    return np.random.default_rng(np.random.SeedSequence((_STREAM_SEQUENCE, seed, m, index)))


def bootstrap_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((_STREAM_BOOTSTRAP, seed)))


def derived_reference_seed(seed: int) -> int:
    """Seed for the companion reference run of an interleaved experiment."""
    return int(np.random.SeedSequence((_STREAM_REFERENCE, seed)).generate_state(1, np.uint64)[0])


@dataclass(frozen=True, eq=False)
class ExperimentPlan:
    """Everything needed to produce a decay dataset.

    ``shots = 0`` means exact per-sequence expectation values, leaving
    sequence sampling as the only source of variance.  ``prep`` and
    ``measurement`` are Pauli 4-vectors (see
    :func:`~dihedral_rb.liouville.state_vector`).
    """

    j: int
    mode: str  # "standard" | "interleaved"
    lengths: tuple[int, ...]
    sequences_per_length: int
    shots: int
    prep: np.ndarray
    measurement: np.ndarray
    noise: GateNoiseMap
    seed: int

    def __post_init__(self):
        if self.mode not in ("standard", "interleaved"):
            raise ValueError(f"mode must be 'standard' or 'interleaved', got {self.mode!r}")
        if not (isinstance(self.j, int) and self.j >= 1):
            raise ValueError(f"group parameter j must be a positive integer, got {self.j!r}")
        lengths = tuple(int(m) for m in self.lengths)
        if not lengths or any(m < 1 for m in lengths):
            raise ValueError("sequence lengths must be positive integers")
        if any(b <= a for a, b in zip(lengths, lengths[1:])):
            raise ValueError(f"sequence lengths must be strictly increasing, got {lengths}")
        if self.mode == "interleaved" and any(m % 2 for m in lengths):
            raise ValueError(
                "interleaved sequences need even lengths so the inversion gate "
                f"stays in the benchmarked group; got {lengths}"
            )
        if self.sequences_per_length < 1:
            raise ValueError("sequences_per_length must be at least 1")
        if self.shots < 0:
            raise ValueError("shots must be 0 (exact mode) or positive")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")
        prep = np.array(self.prep, dtype=float)
        meas = np.array(self.measurement, dtype=float)
        if prep.shape != (4,) or meas.shape != (4,):
            raise ValueError("prep and measurement must be Pauli 4-vectors")
        if abs(prep[0] - 1.0) > 1e-9:
            raise ValueError(f"prepared state must have unit trace, got c_I = {prep[0]!r}")
        prep.setflags(write=False)
        meas.setflags(write=False)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "prep", prep)
        object.__setattr__(self, "measurement", meas)
        self.noise.validate(self.noise_group_j)

    @property
    def noise_group_j(self) -> int:
        """Group parameter in which gates are labelled for noise lookup.

        Interleaved runs label everything in the order-``4j`` supergroup so
        one noise map covers the random gates, the interleaved gate, and
        the inversion.
        """
        return self.j if self.mode == "standard" else 2 * self.j

    @property
    def b_settings(self) -> tuple[tuple[int, int], ...]:
        """The (b1, b2) measurement-frame settings this plan enumerates."""
        return _B_SETTINGS_EVEN if self.j % 2 == 0 else _B_SETTINGS_ODD


@dataclass(frozen=True)
class SequenceRecord:
    """One drawn sequence plus its inversion gate for a (b1, b2) setting.

    ``inversion`` is labelled in the plan's noise group (the supergroup for
    interleaved mode, where its rotation index is always even).
    """

    j: int
    mode: str
    z_draws: tuple[int, ...]
    x_draws: tuple[int, ...]
    b1: int
    b2: int
    inversion: GroupElement


def _ideal_step(plan: ExperimentPlan, z: int, x: int) -> GroupElement:
    """The ideal composite gate of one time step, in noise-group labels."""
    nj = plan.noise_group_j
    if plan.mode == "standard":
        return GroupElement(nj, z, x)
    drawn = GroupElement(nj, 2 * z, x)
    return GroupElement(nj, 1, 0).multiply(drawn)


def build_record(
    plan: ExperimentPlan,
    z_draws: Sequence[int],
    x_draws: Sequence[int],
    b1: int,
    b2: int,
) -> SequenceRecord:
    """Assemble a record from explicit draws, computing the inversion gate."""
    z_draws = tuple(int(z) for z in z_draws)
    x_draws = tuple(int(x) for x in x_draws)
    if len(z_draws) != len(x_draws):
        raise ValueError("z and x draws must have equal length")
    if plan.mode == "interleaved" and len(z_draws) % 2:
        raise ValueError("interleaved sequences must have even length")
    if any(not 0 <= z < plan.j for z in z_draws) or any(x not in (0, 1) for x in x_draws):
        raise ValueError("draws outside the benchmarked group")
    nj = plan.noise_group_j
    composite = GroupElement.identity(nj)
    for z, x in zip(z_draws, x_draws):
        composite = _ideal_step(plan, z, x).multiply(composite)
    target = pauli_element(nj, b1, b2)  # rejects b2 = 1 for odd groups
    inversion = target.multiply(composite.inverse())
    if plan.mode == "interleaved" and inversion.z % 2:
        raise ValueError(
            "inversion gate falls outside the benchmarked group; "
            "b2 = 1 needs an even group parameter"
        )
    return SequenceRecord(plan.j, plan.mode, z_draws, x_draws, b1, b2, inversion)


def sample_sequence(
    plan: ExperimentPlan, m: int, b1: int, b2: int, rng: np.random.Generator
) -> SequenceRecord:
    """Draw one uniform random sequence of length ``m``."""
    z = rng.integers(0, plan.j, size=m)
    x = rng.integers(0, 2, size=m)
    return build_record(plan, z, x, b1, b2)


def _applied_elements(record: SequenceRecord, plan: ExperimentPlan):
    """Noisy gates in application order, inversion last."""
    nj = plan.noise_group_j
    for z, x in zip(record.z_draws, record.x_draws):
        if plan.mode == "standard":
            yield GroupElement(nj, z, x)
        else:
            yield GroupElement(nj, 2 * z, x)
            yield GroupElement(nj, 1, 0)
    yield record.inversion


def survival_exact(record: SequenceRecord, plan: ExperimentPlan) -> float:
    """Exact survival probability of one sequence under the plan's noise.

    Every applied gate, the interleaved gate included, is one noisy gate:
    its error channel is resolved through the plan's noise map and composed
    after the ideal gate.  The inversion gate is treated identically.
    """
    s = np.array(plan.prep)
    for element in _applied_elements(record, plan):
        s = plan.noise.resolve(element) @ (element.superoperator() @ s)
    return expectation(plan.measurement, s)


def survival_sampled(
    record: SequenceRecord, plan: ExperimentPlan, shots: int, rng: np.random.Generator
) -> float:
    """Empirical mean of ``shots`` Bernoulli outcomes of one sequence."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    p = survival_exact(record, plan)
    return float(rng.binomial(shots, min(max(p, 0.0), 1.0))) / shots


# ---------------------------------------------------------------------------
# Batched evaluation.  The scalar path above is the reference; the batched
# path below computes identical probabilities for whole blocks of sequences
# and is what the dataset builder uses.


def _propagation_tables(plan: ExperimentPlan) -> tuple[np.ndarray, np.ndarray]:
    """(noisy element matrices, noisy per-step matrices), both index ``2z + x``."""
    nj = plan.noise_group_j
    element_mats = np.stack(
        [plan.noise.resolve(g) @ g.superoperator() for g in group_elements(nj)]
    )
    if plan.mode == "standard":
        return element_mats, element_mats
    t_mat = element_mats[2 * 1 + 0]
    step_mats = np.stack(
        [t_mat @ element_mats[2 * (2 * z) + x] for z in range(plan.j) for x in (0, 1)]
    )
    return element_mats, step_mats


def _batch_survivals(
    plan: ExperimentPlan,
    zs: np.ndarray,
    xs: np.ndarray,
    tables: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> np.ndarray:
    """Exact survival probabilities, shape ``(n_sequences, n_b_settings)``.

    The final state after the random part of each sequence is shared by all
    (b1, b2) settings; only the inversion differs.
    """
    element_mats, step_mats = tables if tables is not None else _propagation_tables(plan)
    n_seq, m = zs.shape
    nj = plan.noise_group_j
    idx = 2 * zs + xs
    s = np.tile(plan.prep, (n_seq, 1))
    z_comp = np.zeros(n_seq, dtype=np.int64)
    x_comp = np.zeros(n_seq, dtype=np.int64)
    for t in range(m):
        s = np.einsum("kij,kj->ki", step_mats[idx[:, t]], s)
        if plan.mode == "standard":
            z_step = zs[:, t]
        else:
            z_step = 1 + 2 * zs[:, t]
        x_step = xs[:, t]
        z_comp = np.mod(z_step + np.where(x_step == 0, z_comp, -z_comp), nj)
        x_comp = x_comp ^ x_step
    # Inverse of the ideal composite, then the X^b1 Z^b2 target on the left.
    z_inv = np.where(x_comp == 0, (-z_comp) % nj, z_comp)
    out = np.empty((n_seq, len(plan.b_settings)))
    for col, (b1, b2) in enumerate(plan.b_settings):
        target = pauli_element(nj, b1, b2)
        z_g = np.mod(target.z + (1 if target.x == 0 else -1) * z_inv, nj)
        x_g = target.x ^ x_comp
        final = np.einsum("kij,kj->ki", element_mats[2 * z_g + x_g], s)
        probs = 0.5 * (final @ plan.measurement)
        if probs.min() < -1e-9 or probs.max() > 1.0 + 1e-9:
            raise UnphysicalError(
                f"survival probabilities outside [0, 1]: range "
                f"[{probs.min()!r}, {probs.max()!r}]"
            )
        out[:, col] = probs
    return out


def _length_survivals(
    plan: ExperimentPlan, m: int, tables: Optional[tuple[np.ndarray, np.ndarray]] = None
) -> np.ndarray:
    """Per-sequence survival estimates at one length, all (b1, b2) columns.

    The same gate draws feed every column, which cancels sequence-sampling
    noise at leading order in the fitted signal combinations.
    """
    k = plan.sequences_per_length
    zs = np.empty((k, m), dtype=np.int64)
    xs = np.empty((k, m), dtype=np.int64)
    generators = []
    for i in range(k):
        rng = sequence_rng(plan.seed, m, i)
        zs[i] = rng.integers(0, plan.j, size=m)
        xs[i] = rng.integers(0, 2, size=m)
        generators.append(rng)
    probs = _batch_survivals(plan, zs, xs, tables)
    if plan.shots == 0:
        return probs
    clipped = np.clip(probs, 0.0, 1.0)
    out = np.empty_like(probs)
    for i, rng in enumerate(generators):
        out[i] = rng.binomial(plan.shots, clipped[i]) / plan.shots
    return out


def estimate_pr(plan: ExperimentPlan, m: int, b1: int, b2: int) -> tuple[float, float]:
    """Survival probability estimate and standard error at one length.

    Averages the plan's ``sequences_per_length`` sequences; the standard
    error is the sample standard deviation across sequences over
    ``sqrt(k)``.  Identical to the corresponding dataset cell.
    """
    try:
        col = plan.b_settings.index((b1, b2))
    except ValueError:
        raise ValueError(f"(b1, b2) = {(b1, b2)!r} not enumerated for j = {plan.j}") from None
    values = _length_survivals(plan, m)[:, col]
    return float(values.mean()), _stderr(values)


def _stderr(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / np.sqrt(values.size))


def exhaustive_pr(plan: ExperimentPlan, m: int, b1: int, b2: int) -> float:
    """Exact sequence-averaged survival over all ``(2j)^m`` sequences.

    Ignores ``sequences_per_length`` and ``shots``; this is the
    brute-force enumeration oracle for short lengths.
    """
    n_gates = 2 * plan.j
    total = n_gates**m
    if total > _EXHAUSTIVE_CAP:
        raise ValueError(f"exhaustive enumeration of {total} sequences is too large")
    try:
        col = plan.b_settings.index((b1, b2))
    except ValueError:
        raise ValueError(f"(b1, b2) = {(b1, b2)!r} not enumerated for j = {plan.j}") from None
    digits = (np.arange(total)[:, None] // n_gates ** np.arange(m)[None, :]) % n_gates
    zs, xs = digits // 2, digits % 2
    probs = _batch_survivals(plan, zs, xs)
    return float(probs[:, col].mean())


@dataclass(eq=False)
class DecayDataset:
    """Per-sequence survival estimates over a grid of sequence lengths.

    ``survivals`` has shape ``(n_lengths, sequences_per_length, n_b)`` with
    the third axis ordered like ``b_settings``.  Keeping the per-sequence
    values (not just the means) is what makes bootstrap-over-sequences
    uncertainty estimation possible downstream.
    """

    j: int
    mode: str
    lengths: tuple[int, ...]
    sequences_per_length: int
    shots: int
    seed: int
    b_settings: tuple[tuple[int, int], ...]
    survivals: np.ndarray

    def __post_init__(self):
        expected = (len(self.lengths), self.sequences_per_length, len(self.b_settings))
        if self.survivals.shape != expected:
            raise ValueError(f"survivals shape {self.survivals.shape} != {expected}")
        if any(b <= a for a, b in zip(self.lengths, self.lengths[1:])):
            raise ValueError("lengths must be strictly increasing")

    @property
    def means(self) -> np.ndarray:
        return self.survivals.mean(axis=1)

    @property
    def stderrs(self) -> np.ndarray:
        k = self.sequences_per_length
        if k < 2:
            return np.zeros_like(self.means)
        return self.survivals.std(axis=1, ddof=1) / np.sqrt(k)

    def pr(self, m: int, b1: int, b2: int) -> tuple[float, float]:
        li = self.lengths.index(m)
        col = self.b_settings.index((b1, b2))
        values = self.survivals[li, :, col]
        return float(values.mean()), _stderr(values)

    def signal_samples(self, which: str) -> np.ndarray:
        """Per-sequence signal combinations, shape (n_lengths, k).

        ``"z"`` is Pr(00) + Pr(01) - Pr(10) - Pr(11), the single
        exponential with the Z-decay rate and amplitude ~4A; ``"xy"`` is
        Pr(00) - Pr(01), rate ``xy_decay`` and amplitude ~2B.  Only defined
        when all four settings were run (even group parameter).
        """
        if self.b_settings != _B_SETTINGS_EVEN:
            raise ValueError("signal combinations need all four (b1, b2) settings")
        q = self.survivals
        if which == "z":
            return q[:, :, 0] + q[:, :, 1] - q[:, :, 2] - q[:, :, 3]
        if which == "xy":
            return q[:, :, 0] - q[:, :, 1]
        raise ValueError(f"unknown signal {which!r}")

    def signal_points(self, which: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(lengths, means, stderrs) of a signal combination."""
        samples = self.signal_samples(which)
        k = self.sequences_per_length
        means = samples.mean(axis=1)
        if k < 2:
            errs = np.zeros_like(means)
        else:
            errs = samples.std(axis=1, ddof=1) / np.sqrt(k)
        return np.array(self.lengths, dtype=float), means, errs

    def to_csv(self, path) -> None:
        """Write the per-length summary table, rows sorted by (m, b1, b2).

        Columns: m, b1, b2, mean, stderr, k, shots.  Floats are written
        with shortest round-trip formatting, so identical datasets always
        produce byte-identical files.
        """
        means, stderrs = self.means, self.stderrs
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["m", "b1", "b2", "mean", "stderr", "k", "shots"])
            for li, m in enumerate(self.lengths):
                for col, (b1, b2) in enumerate(self.b_settings):
                    writer.writerow(
                        [
                            m,
                            b1,
                            b2,
                            repr(float(means[li, col])),
                            repr(float(stderrs[li, col])),
                            self.sequences_per_length,
                            self.shots,
                        ]
                    )


def decay_dataset(plan: ExperimentPlan) -> DecayDataset:
    """Run the full experiment described by the plan.

    Deterministic: a given plan (including its seed) always produces the
    identical dataset, independent of evaluation order.
    """
    tables = _propagation_tables(plan)
    n_b = len(plan.b_settings)
    survivals = np.empty((len(plan.lengths), plan.sequences_per_length, n_b))
    for li, m in enumerate(plan.lengths):
        survivals[li] = _length_survivals(plan, m, tables)
    return DecayDataset(
        j=plan.j,
        mode=plan.mode,
        lengths=plan.lengths,
        sequences_per_length=plan.sequences_per_length,
        shots=plan.shots,
        seed=plan.seed,
        b_settings=plan.b_settings,
        survivals=survivals,
    )
