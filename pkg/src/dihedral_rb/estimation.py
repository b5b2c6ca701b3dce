"""Decay-curve fitting, uncertainty estimation, and the T-gate bound.

The two signal combinations of a dataset are each a single exponential
``a * p^m``, which avoids the ill-conditioned two-exponential fit of the
raw survival curves.  Average fidelity follows from the two rates as
``F = 1/2 + (p_z + 2 p_xy) / 6``.

For interleaved runs the composite and reference fidelities are converted
to process-matrix elements ``chi = (3F - 1)/2``; the target-gate point
estimate is their ratio and the guaranteed interval comes from inverting
the multiplicativity bound

    |chi_comp - chi_ref * chi_t| <= 2 sqrt((1-chi_ref) chi_ref (1-chi_t) chi_t)
                                    + (1-chi_ref)(1-chi_t),

which holds for every CPTP pair, so the true value always lies in the
interval computed from exact inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import curve_fit

from .liouville import chi_to_fidelity
from .protocol import DecayDataset, bootstrap_rng

__all__ = [
    "RATE_CEILING",
    "FitFailureError",
    "ExponentialFit",
    "OffsetExponentialFit",
    "fit_single_exponential",
    "fit_exponential_with_offset",
    "FitReport",
    "assemble_standard",
    "fit_standard",
    "BoundEstimate",
    "interleaved_bound",
    "assemble_interleaved",
]

#: Upper clamp for fitted decay rates; tolerates sampling noise above 1
#: while still flagging unphysical fits.
RATE_CEILING = 1.05

_MAXFEV = 20_000


class FitFailureError(RuntimeError):
    """A decay fit could not be performed; carries diagnostics."""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class ExponentialFit:
    """Weighted least-squares fit of ``y = amplitude * rate^m``."""

    amplitude: float
    rate: float
    rate_clamped: bool
    residual_norm: float
    n_evaluations: int


@dataclass(frozen=True)
class OffsetExponentialFit:
    """Fit of ``y = amplitude * rate^m + offset`` (odd-group fallback)."""

    amplitude: float
    rate: float
    offset: float
    rate_clamped: bool
    residual_norm: float
    n_evaluations: int


def _as_fit_arrays(lengths, values, stderrs):
    m = np.asarray(lengths, dtype=float)
    y = np.asarray(values, dtype=float)
    if m.shape != y.shape or m.ndim != 1:
        raise ValueError("lengths and values must be 1-d arrays of equal size")
    if stderrs is None:
        return m, y, None
    s = np.asarray(stderrs, dtype=float)
    if s.shape != y.shape:
        raise ValueError("stderrs must match values in shape")
    if np.any(s < 0):
        raise ValueError("standard errors must be non-negative")
    # Weighted fitting needs strictly positive errors; exact-mode data with
    # any vanishing stderr falls back to an unweighted fit.
    if np.any(s == 0):
        return m, y, None
    return m, y, s


def _log_linear_guess(m, y, ceiling=RATE_CEILING):
    """Initial (amplitude, rate) from a regression of log y on m."""
    positive = y > 0
    slope, intercept = np.polyfit(m[positive], np.log(y[positive]), 1)
    rate = float(np.clip(np.exp(slope), 1e-6, ceiling - 1e-6))
    amplitude = float(np.exp(intercept))
    return amplitude, rate


def fit_single_exponential(lengths, values, stderrs=None) -> ExponentialFit:
    """Fit ``y = a * p^m`` by weighted least squares.

    Needs at least three lengths, at least two of them with positive
    values (for the log-domain starting point).  The rate is constrained
    to ``(0, RATE_CEILING]`` and flagged if it ends up at the ceiling.

    Raises :class:`FitFailureError` when the data cannot be fit.
    """
    m, y, s = _as_fit_arrays(lengths, values, stderrs)
    diagnostics = {"n_points": int(m.size), "n_positive": int(np.sum(y > 0))}
    if m.size < 3:
        raise FitFailureError("need at least 3 sequence lengths to fit", diagnostics)
    if np.sum(y > 0) < 2:
        raise FitFailureError("need at least 2 positive values to fit", diagnostics)

    def model(x, a, p):
        return a * p**x

    p0 = _log_linear_guess(m, y)
    try:
        params, _, infodict, *_ = curve_fit(
            model,
            m,
            y,
            p0=p0,
            sigma=s,
            absolute_sigma=s is not None,
            bounds=([-np.inf, 1e-12], [np.inf, RATE_CEILING]),
            maxfev=_MAXFEV,
            full_output=True,
        )
    except RuntimeError as exc:
        raise FitFailureError(f"exponential fit did not converge: {exc}", diagnostics) from exc
    amplitude, rate = float(params[0]), float(params[1])
    weights = s if s is not None else np.ones_like(y)
    residual_norm = float(np.linalg.norm((y - model(m, amplitude, rate)) / weights))
    return ExponentialFit(
        amplitude=amplitude,
        rate=rate,
        rate_clamped=bool(rate >= RATE_CEILING - 1e-9),
        residual_norm=residual_norm,
        n_evaluations=int(infodict["nfev"]),
    )


def fit_exponential_with_offset(lengths, values, stderrs=None) -> OffsetExponentialFit:
    """Fit ``y = a * p^m + c``; used only by the odd-group fallback path."""
    m, y, s = _as_fit_arrays(lengths, values, stderrs)
    diagnostics = {"n_points": int(m.size)}
    if m.size < 4:
        raise FitFailureError("need at least 4 sequence lengths for an offset fit", diagnostics)

    def model(x, a, p, c):
        return a * p**x + c

    # Tail value approximates the offset, front value the amplitude.
    c0 = float(y[-1])
    a0 = float(y[0] - c0)
    shifted = y - c0
    if np.sum(shifted > 0) >= 2:
        _, rate0 = _log_linear_guess(m, shifted)
    else:
        rate0 = 0.9
    try:
        params, _, infodict, *_ = curve_fit(
            model,
            m,
            y,
            p0=(a0 if a0 != 0 else 0.5, rate0, c0),
            sigma=s,
            absolute_sigma=s is not None,
            bounds=([-np.inf, 1e-12, -np.inf], [np.inf, RATE_CEILING, np.inf]),
            maxfev=_MAXFEV,
            full_output=True,
        )
    except RuntimeError as exc:
        raise FitFailureError(f"offset fit did not converge: {exc}", diagnostics) from exc
    amplitude, rate, offset = (float(v) for v in params)
    weights = s if s is not None else np.ones_like(y)
    residual_norm = float(np.linalg.norm((y - model(m, amplitude, rate, offset)) / weights))
    return OffsetExponentialFit(
        amplitude=amplitude,
        rate=rate,
        offset=offset,
        rate_clamped=bool(rate >= RATE_CEILING - 1e-9),
        residual_norm=residual_norm,
        n_evaluations=int(infodict["nfev"]),
    )


@dataclass
class FitReport:
    """Fitted decay parameters and the fidelity estimates built from them.

    ``z_rate`` and ``xy_rate`` are the rates of the Z-component and
    XY-plane decay curves (reported as ``p0`` and ``p1`` in serialized
    reports).  Interleaved reports additionally carry the reference and
    composite fidelities plus the target-gate estimate and its guaranteed
    interval.
    """

    mode: str
    j: int
    z_rate: float
    xy_rate: float
    z_amplitude: float
    xy_amplitude: float
    average_fidelity: float
    z_rate_stderr: float = 0.0
    xy_rate_stderr: float = 0.0
    average_fidelity_stderr: float = 0.0
    z_rate_ci: Optional[tuple[float, float]] = None
    xy_rate_ci: Optional[tuple[float, float]] = None
    average_fidelity_ci: Optional[tuple[float, float]] = None
    diagnostics: dict = field(default_factory=dict)
    # Interleaved-mode extras.
    reference_fidelity: Optional[float] = None
    reference_fidelity_stderr: Optional[float] = None
    composite_fidelity: Optional[float] = None
    composite_fidelity_stderr: Optional[float] = None
    chi_reference: Optional[float] = None
    chi_composite: Optional[float] = None
    t_fidelity: Optional[float] = None
    t_fidelity_stderr: Optional[float] = None
    t_interval: Optional[tuple[float, float]] = None


def combined_fidelity(z_rate: float, xy_rate: float) -> float:
    """Average fidelity from the two decay rates: ``1/2 + (p_z + 2 p_xy)/6``."""
    return 0.5 + (z_rate + 2.0 * xy_rate) / 6.0


def assemble_standard(
    z_fit: ExponentialFit,
    xy_fit: ExponentialFit,
    *,
    j: int,
    mode: str = "standard",
    z_rate_stderr: float = 0.0,
    xy_rate_stderr: float = 0.0,
) -> FitReport:
    """Combine the two signal fits into a fidelity report.

    The fidelity error follows from the rate errors as
    ``sqrt(sigma_z^2 + 4 sigma_xy^2) / 6``.
    """
    f = combined_fidelity(z_fit.rate, xy_fit.rate)
    f_err = float(np.sqrt(z_rate_stderr**2 + 4.0 * xy_rate_stderr**2) / 6.0)
    return FitReport(
        mode=mode,
        j=j,
        z_rate=z_fit.rate,
        xy_rate=xy_fit.rate,
        z_amplitude=z_fit.amplitude,
        xy_amplitude=xy_fit.amplitude,
        average_fidelity=f,
        z_rate_stderr=z_rate_stderr,
        xy_rate_stderr=xy_rate_stderr,
        average_fidelity_stderr=f_err,
        diagnostics={
            "z_residual_norm": z_fit.residual_norm,
            "xy_residual_norm": xy_fit.residual_norm,
            "z_rate_clamped": z_fit.rate_clamped,
            "xy_rate_clamped": xy_fit.rate_clamped,
            "z_n_evaluations": z_fit.n_evaluations,
            "xy_n_evaluations": xy_fit.n_evaluations,
        },
    )


def _even_j_signal_fits(dataset: DecayDataset, sample_indices=None):
    """Fit both signal combinations, optionally on resampled sequences."""
    fits = []
    for which in ("z", "xy"):
        samples = dataset.signal_samples(which)
        if sample_indices is not None:
            samples = np.take_along_axis(samples, sample_indices, axis=1)
        k = samples.shape[1]
        values = samples.mean(axis=1)
        stderrs = samples.std(axis=1, ddof=1) / np.sqrt(k) if k > 1 else None
        fits.append(fit_single_exponential(np.array(dataset.lengths, float), values, stderrs))
    return fits


def _odd_j_fits(dataset: DecayDataset, sample_indices=None):
    """Odd-group fallback: only b2 = 0 exists, so Z is isolated by the
    (0,0)-(1,0) difference and the XY rate comes from an offset fit of the
    sum (assumes no Y-axis preparation/measurement component)."""
    q = dataset.survivals
    if sample_indices is not None:
        q = _resample3(q, sample_indices)
    diff = (q[:, :, 0] - q[:, :, 1]) / 2.0
    total = (q[:, :, 0] + q[:, :, 1]) / 2.0
    k = q.shape[1]
    lengths = np.array(dataset.lengths, float)

    def stats(samples):
        values = samples.mean(axis=1)
        stderrs = samples.std(axis=1, ddof=1) / np.sqrt(k) if k > 1 else None
        return values, stderrs

    z_fit = fit_single_exponential(lengths, *stats(diff))
    xy_offset = fit_exponential_with_offset(lengths, *stats(total))
    xy_fit = ExponentialFit(
        amplitude=xy_offset.amplitude,
        rate=xy_offset.rate,
        rate_clamped=xy_offset.rate_clamped,
        residual_norm=xy_offset.residual_norm,
        n_evaluations=xy_offset.n_evaluations,
    )
    return z_fit, xy_fit


def _resample3(q: np.ndarray, indices: np.ndarray) -> np.ndarray:
    return np.take_along_axis(q, indices[:, :, None], axis=1)


def fit_standard(
    dataset: DecayDataset, n_resamples: int = 200, seed: Optional[int] = None
) -> FitReport:
    """Fit a dataset and bootstrap the parameter uncertainties.

    Uncertainty comes from a nonparametric bootstrap over sequences: each
    resample draws sequences with replacement (the same draw for every
    signal at a given length, matching how the signals share sequences),
    refits, and the spread of refitted parameters gives the standard
    errors and the 95% percentile intervals.
    """
    odd = dataset.j % 2 == 1
    if odd:
        z_fit, xy_fit = _odd_j_fits(dataset)
    else:
        z_fit, xy_fit = _even_j_signal_fits(dataset)

    rng = bootstrap_rng(dataset.seed if seed is None else seed)
    k = dataset.sequences_per_length
    n_lengths = len(dataset.lengths)
    boot = {"z": [], "xy": [], "f": []}
    failures = 0
    for _ in range(max(0, n_resamples)):
        indices = rng.integers(0, k, size=(n_lengths, k))
        try:
            if odd:
                bz, bxy = _odd_j_fits(dataset, indices)
            else:
                bz, bxy = _even_j_signal_fits(dataset, indices)
        except FitFailureError:
            failures += 1
            continue
        boot["z"].append(bz.rate)
        boot["xy"].append(bxy.rate)
        boot["f"].append(combined_fidelity(bz.rate, bxy.rate))
    if n_resamples > 0 and len(boot["f"]) < max(2, n_resamples // 2):
        raise FitFailureError(
            "bootstrap refits failed too often",
            {"n_resamples": n_resamples, "failures": failures},
        )

    def spread(values):
        arr = np.asarray(values, dtype=float)
        if arr.size < 2:
            return 0.0, None
        return float(arr.std(ddof=1)), (
            float(np.percentile(arr, 2.5)),
            float(np.percentile(arr, 97.5)),
        )

    z_err, z_ci = spread(boot["z"])
    xy_err, xy_ci = spread(boot["xy"])
    f_err, f_ci = spread(boot["f"])
    report = assemble_standard(
        z_fit,
        xy_fit,
        j=dataset.j,
        mode=dataset.mode,
        z_rate_stderr=z_err,
        xy_rate_stderr=xy_err,
    )
    report.z_rate_ci = z_ci
    report.xy_rate_ci = xy_ci
    report.average_fidelity_ci = f_ci
    report.diagnostics["bootstrap_resamples"] = len(boot["f"])
    report.diagnostics["bootstrap_failures"] = failures
    report.diagnostics["bootstrap_fidelity_stderr"] = f_err
    if odd:
        report.diagnostics["odd_j_fallback"] = True
    return report


@dataclass(frozen=True)
class BoundEstimate:
    """Target-gate estimate from composite and reference chi values."""

    chi_point: float
    fidelity_point: float
    fidelity_low: float
    fidelity_high: float

    @property
    def fidelity_interval(self) -> tuple[float, float]:
        return (self.fidelity_low, self.fidelity_high)


def _bound_margin(t: np.ndarray, chi_comp: float, chi_ref: float) -> np.ndarray:
    """Nonnegative exactly where chi_t = t is consistent with the bound."""
    slack = 2.0 * np.sqrt(np.maximum((1 - chi_ref) * chi_ref * (1 - t) * t, 0.0))
    slack = slack + (1 - chi_ref) * (1 - t)
    return slack - np.abs(chi_comp - chi_ref * t)


def interleaved_bound(
    chi_composite: float, chi_reference: float, tol: float = 1e-8
) -> BoundEstimate:
    """Point estimate and guaranteed interval for the interleaved gate.

    The point estimate is ``chi_composite / chi_reference``.  The interval
    is the hull of all ``chi_t`` in [0, 1] consistent with the
    multiplicativity bound, located on a coarse grid and then refined to
    ``tol`` by bisection on the boundary crossings; it is finally mapped to
    fidelities.  The admissible set always contains the point estimate
    whenever the ratio lies in [0, 1].
    """
    y, c = float(chi_composite), float(chi_reference)
    if not 0.0 < c <= 1.0:
        raise ValueError(f"reference chi must lie in (0, 1], got {c!r}")
    if not 0.0 < y <= 1.0:
        raise ValueError(f"composite chi must lie in (0, 1], got {y!r}")

    grid = np.linspace(0.0, 1.0, 4097)
    ratio = y / c
    if 0.0 <= ratio <= 1.0:
        # The ratio always satisfies the bound; seeding it keeps the scan
        # from missing a degenerate admissible set (e.g. chi_reference = 1).
        grid = np.unique(np.concatenate([grid, [ratio]]))
    inside = _bound_margin(grid, y, c) >= 0.0
    if not inside.any():
        raise FitFailureError(
            "no target-gate fidelity is consistent with the fitted chi values",
            {"chi_composite": y, "chi_reference": c},
        )
    first, last = int(np.argmax(inside)), int(len(grid) - 1 - np.argmax(inside[::-1]))

    def refine(lo: float, hi: float, want_inside_high: bool) -> float:
        # Invariant: exactly one endpoint is inside the admissible set.
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if (_bound_margin(np.array([mid]), y, c) >= 0.0)[0] == want_inside_high:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    chi_lo = 0.0 if first == 0 else refine(grid[first - 1], grid[first], True)
    chi_hi = 1.0 if last == len(grid) - 1 else refine(grid[last], grid[last + 1], False)

    return BoundEstimate(
        chi_point=ratio,
        fidelity_point=chi_to_fidelity(min(max(ratio, 0.0), 1.0)),
        fidelity_low=chi_to_fidelity(chi_lo),
        fidelity_high=chi_to_fidelity(chi_hi),
    )


def assemble_interleaved(reference: FitReport, interleaved: FitReport) -> FitReport:
    """Build the target-gate report from the reference and interleaved fits.

    Both average fidelities are converted to chi values (clipped into
    (0, 1] if sampling noise pushed a fit marginally past 1) and fed to
    :func:`interleaved_bound`; the point-estimate error follows from the
    two fidelity errors by first-order propagation through the ratio.
    """
    chi_ref = min(1.5 * reference.average_fidelity - 0.5, 1.0)
    chi_comp = min(1.5 * interleaved.average_fidelity - 0.5, 1.0)
    if chi_ref <= 0.0 or chi_comp <= 0.0:
        raise FitFailureError(
            "fitted fidelities too low to characterize the interleaved gate",
            {"chi_reference": chi_ref, "chi_composite": chi_comp},
        )
    bound = interleaved_bound(chi_comp, chi_ref)
    sigma_comp = 1.5 * interleaved.average_fidelity_stderr
    sigma_ref = 1.5 * reference.average_fidelity_stderr
    sigma_ratio = abs(bound.chi_point) * np.sqrt(
        (sigma_comp / chi_comp) ** 2 + (sigma_ref / chi_ref) ** 2
    )
    report = FitReport(
        mode="interleaved",
        j=interleaved.j,
        z_rate=interleaved.z_rate,
        xy_rate=interleaved.xy_rate,
        z_amplitude=interleaved.z_amplitude,
        xy_amplitude=interleaved.xy_amplitude,
        average_fidelity=interleaved.average_fidelity,
        z_rate_stderr=interleaved.z_rate_stderr,
        xy_rate_stderr=interleaved.xy_rate_stderr,
        average_fidelity_stderr=interleaved.average_fidelity_stderr,
        z_rate_ci=interleaved.z_rate_ci,
        xy_rate_ci=interleaved.xy_rate_ci,
        average_fidelity_ci=interleaved.average_fidelity_ci,
        diagnostics=dict(interleaved.diagnostics),
        reference_fidelity=reference.average_fidelity,
        reference_fidelity_stderr=reference.average_fidelity_stderr,
        composite_fidelity=interleaved.average_fidelity,
        composite_fidelity_stderr=interleaved.average_fidelity_stderr,
        chi_reference=chi_ref,
        chi_composite=chi_comp,
        t_fidelity=bound.fidelity_point,
        t_fidelity_stderr=float(2.0 * sigma_ratio / 3.0),
        t_interval=bound.fidelity_interval,
    )
    return report
