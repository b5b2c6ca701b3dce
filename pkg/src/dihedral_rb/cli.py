"""Command-line experiment runner.

Two verbs: ``run`` executes a configured experiment and writes the decay
CSV plus a fit report; ``verify`` checks a config (schema, channel
physicality, group membership) without simulating anything.

Exit codes: 0 success, 2 invalid configuration, 3 fit failure (decay data
is still written), 4 unphysical model.  Failures print a single
``error[<category>]: ...`` line to stderr.
"""

from __future__ import annotations

import os
import sys
from importlib import resources
from pathlib import Path
from typing import Optional

import click

from .config import ConfigError, ExperimentConfig, load_config
from .estimation import (
    FitFailureError,
    FitReport,
    assemble_interleaved,
    fit_standard,
)
from .liouville import UnphysicalError
from .noise import GateNoiseMap
from .protocol import ExperimentPlan, decay_dataset, derived_reference_seed

EXIT_CONFIG = 2
EXIT_FIT = 3
EXIT_UNPHYSICAL = 4

OUT_DIR_ENV = "DIHEDRAL_RB_OUT_DIR"


def _fail(category: str, message: str, code: int):
    click.echo(f"error[{category}]: {message}", err=True)
    sys.exit(code)


def _resolve_config_path(value: str) -> Path:
    """Accept a filesystem path or the bare name of a bundled config."""
    path = Path(value)
    if path.exists():
        return path
    if value.replace("_", "").replace("-", "").isalnum():
        bundled = resources.files("dihedral_rb") / "configs" / f"{value}.cfg"
        candidate = Path(str(bundled))
        if candidate.exists():
            return candidate
    raise ConfigError(f"config file not found: {value}")


def _load(config: str, seed, lengths, out_dir) -> ExperimentConfig:
    parsed_lengths = None
    if lengths is not None:
        try:
            parsed_lengths = tuple(int(part) for part in lengths.split(",") if part.strip())
        except ValueError:
            raise ConfigError(f"--lengths must be comma-separated integers, got {lengths!r}")
        if not parsed_lengths:
            raise ConfigError("--lengths must name at least one length")
    if out_dir is None:
        out_dir = os.environ.get(OUT_DIR_ENV) or None
    return load_config(
        _resolve_config_path(config), seed=seed, lengths=parsed_lengths, out_dir=out_dir
    )


def _reference_plan(plan: ExperimentPlan) -> ExperimentPlan:
    """The standard run over the benchmarked group that accompanies an
    interleaved run: same grid, same state, default noise on every gate."""
    return ExperimentPlan(
        j=plan.j,
        mode="standard",
        lengths=plan.lengths,
        sequences_per_length=plan.sequences_per_length,
        shots=plan.shots,
        prep=plan.prep,
        measurement=plan.measurement,
        noise=GateNoiseMap(plan.noise.default),
        seed=derived_reference_seed(plan.seed),
    )


def _reference_data_path(data_path: Path) -> Path:
    return data_path.with_name(data_path.stem + ".reference" + data_path.suffix)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _report_lines(cfg: ExperimentConfig, report: FitReport) -> list[str]:
    plan = cfg.plan
    pairs = [
        ("mode", report.mode),
        ("group_j", report.j),
        ("lengths", ",".join(str(m) for m in plan.lengths)),
        ("sequences_per_length", plan.sequences_per_length),
        ("shots", plan.shots),
        ("seed", plan.seed),
        ("p0", report.z_rate),
        ("p0_stderr", report.z_rate_stderr),
        ("p1", report.xy_rate),
        ("p1_stderr", report.xy_rate_stderr),
        ("amplitude_p0", report.z_amplitude),
        ("amplitude_p1", report.xy_amplitude),
        ("f_avg", report.average_fidelity),
        ("f_avg_stderr", report.average_fidelity_stderr),
    ]
    for name, ci in (
        ("p0", report.z_rate_ci),
        ("p1", report.xy_rate_ci),
        ("f_avg", report.average_fidelity_ci),
    ):
        if ci is not None:
            pairs.append((f"{name}_ci_low", ci[0]))
            pairs.append((f"{name}_ci_high", ci[1]))
    if report.mode == "interleaved":
        pairs += [
            ("f_reference", report.reference_fidelity),
            ("f_reference_stderr", report.reference_fidelity_stderr),
            ("f_composite", report.composite_fidelity),
            ("f_composite_stderr", report.composite_fidelity_stderr),
            ("chi_reference", report.chi_reference),
            ("chi_composite", report.chi_composite),
            ("f_t", report.t_fidelity),
            ("f_t_stderr", report.t_fidelity_stderr),
            ("f_t_low", report.t_interval[0]),
            ("f_t_high", report.t_interval[1]),
            ("reference_data_path", _reference_data_path(cfg.data_path)),
        ]
    for key in sorted(report.diagnostics):
        pairs.append((f"diag_{key}", report.diagnostics[key]))
    return [f"{key} = {_format_value(value)}" for key, value in pairs]


def _write_report(cfg: ExperimentConfig, report: FitReport) -> None:
    text = "\n".join(_report_lines(cfg, report)) + "\n"
    cfg.report_path.parent.mkdir(parents=True, exist_ok=True)
    cfg.report_path.write_text(text)


@click.group()
def main():
    """Dihedral-group randomized benchmarking: simulate, fit, characterize."""


@main.command()
@click.argument("config")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--lengths", type=str, default=None, help="Override lengths, e.g. '2,4,8'.")
@click.option(
    "--out-dir",
    type=click.Path(file_okay=False),
    default=None,
    help=f"Directory for relative output paths (default: ${OUT_DIR_ENV} or cwd).",
)
def run(config, seed, lengths, out_dir):
    """Run the experiment in CONFIG and write decay data plus a fit report."""
    try:
        cfg = _load(config, seed, lengths, out_dir)
    except ConfigError as exc:
        _fail("config", str(exc), EXIT_CONFIG)
    except UnphysicalError as exc:
        _fail("unphysical", str(exc), EXIT_UNPHYSICAL)

    plan = cfg.plan
    try:
        if plan.mode == "interleaved":
            reference = decay_dataset(_reference_plan(plan))
        dataset = decay_dataset(plan)
    except UnphysicalError as exc:
        _fail("unphysical", str(exc), EXIT_UNPHYSICAL)

    cfg.data_path.parent.mkdir(parents=True, exist_ok=True)
    dataset.to_csv(cfg.data_path)
    click.echo(f"decay data written to {cfg.data_path}")
    if plan.mode == "interleaved":
        ref_path = _reference_data_path(cfg.data_path)
        reference.to_csv(ref_path)
        click.echo(f"reference decay data written to {ref_path}")

    try:
        if plan.mode == "interleaved":
            report = assemble_interleaved(fit_standard(reference), fit_standard(dataset))
        else:
            report = fit_standard(dataset)
    except FitFailureError as exc:
        _fail("fit", f"{exc} (decay data was written)", EXIT_FIT)

    _write_report(cfg, report)
    click.echo(f"report written to {cfg.report_path}")
    click.echo(
        f"f_avg = {report.average_fidelity:.6f} "
        f"(p0 = {report.z_rate:.6f}, p1 = {report.xy_rate:.6f})"
    )
    if report.mode == "interleaved":
        low, high = report.t_interval
        click.echo(
            f"f_t = {report.t_fidelity:.6f} guaranteed within [{low:.6f}, {high:.6f}]"
        )


@main.command()
@click.argument("config")
def verify(config):
    """Validate CONFIG (schema, physicality, group membership); no simulation."""
    try:
        cfg = _load(config, None, None, None)
    except ConfigError as exc:
        _fail("config", str(exc), EXIT_CONFIG)
    except UnphysicalError as exc:
        _fail("unphysical", str(exc), EXIT_UNPHYSICAL)
    plan = cfg.plan
    click.echo(
        f"ok: {plan.mode} run over the order-{2 * plan.j} group, "
        f"{len(plan.lengths)} lengths x {plan.sequences_per_length} sequences"
    )


if __name__ == "__main__":
    main()
