"""Command-line frontend: every operation plus the suite runner and calibration."""
import json
import sys
from pathlib import Path
from typing import Optional

import click
from pydantic import ValidationError

from app import config as settings
from app.calibration import calibrate as run_calibration, constants_path
from app.degree import circle_trace, winding_degree
from app.errors import ToolkitError
from app.jacobian import curl_pairing, jac_pairing, sign_classify
from app.maps import GALLERY_NAMES, TestFunction
from app.schemas.domain_payload import Domain, QuadratureSpec
from app.schemas.result_payload import FractionalParams
from app.schemas.suite_payload import CliInvocation, MapSelector, SuiteConfig
from app.sobolev import gagliardo_seminorm
from app.verify import reports_to_json, run_suite, suite_failed, write_summary_csv

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED = 2

DEFAULT_RESOLUTION = 128


class FloatList(click.ParamType):
    """Comma-separated decimals, e.g. ``0.4,0``."""

    name = "floats"

    def convert(self, value, param, ctx):
        if isinstance(value, (tuple, list)):
            return tuple(float(v) for v in value)
        try:
            return tuple(float(part) for part in str(value).split(",") if part.strip())
        except ValueError:
            self.fail(f"{value!r} is not a comma-separated list of numbers", param, ctx)


FLOATS = FloatList()


def map_options(fn):
    """--map and the gallery parameters it may take."""
    options = [
        click.option("--map", "map_name", required=True, help="Gallery name, e.g. power, loglog, conjugation."),
        click.option("--k", type=int, default=None, help="Exponent of the power map."),
        click.option("--delta", type=float, default=None, help="Rotation strength for rotation maps."),
        click.option("--value", type=FLOATS, default=None, help="Value of the constant map."),
        click.option("--base", default=None, help="Base map of rotation-distortion."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def selector(map_name: str, k, delta, value, base) -> MapSelector:
    return MapSelector(name=map_name, k=k, delta=delta, value=value, base=base)


def emit(payload, output: Optional[str]) -> None:
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=2, sort_keys=True)
    if output:
        Path(output).write_text(text + "\n")
    else:
        click.echo(text)


@click.group()
@click.option("--log-level", default=None, help="Logging level (defaults to TOOLKIT_LOG_LEVEL).")
def toolkit(log_level: Optional[str]):
    """Fractional Sobolev degree toolkit."""
    settings.configure_logging(log_level)


@toolkit.command()
@map_options
@click.option("--center", type=FLOATS, default="0,0")
@click.option("--radius", type=float, default=1.0, help="Radius of the ball domain.")
@click.option("--s", type=float, default=0.75)
@click.option("--p", type=float, default=None, help="Integrability; defaults to n/s.")
@click.option("--scheme", type=click.Choice(["tensor-midpoint", "monte-carlo"]), default="tensor-midpoint")
@click.option("--resolution", type=int, default=DEFAULT_RESOLUTION, help="Nodes per axis (tensor) or pairs (Monte Carlo).")
@click.option("--seed", type=int, default=0)
@click.option("--out", "output", default=None)
def seminorm(map_name, k, delta, value, base, center, radius, s, p, scheme, resolution, seed, output):
    """Gagliardo seminorm of a gallery map on a ball."""
    invocation = CliInvocation(
        subcommand="seminorm", map=selector(map_name, k, delta, value, base),
        center=center, radius=radius, s=s, p=p, n=len(center), resolution=resolution, output=output,
    )
    params = FractionalParams(s=invocation.s, p=invocation.exponent, n=invocation.n)
    quad = QuadratureSpec(scheme=scheme, sample_count=resolution, seed=seed)
    estimate = gagliardo_seminorm(invocation.map.build(), Domain.ball(center, radius), params, quad)
    emit(estimate.to_record(), output)
    return EXIT_OK


@toolkit.command()
@map_options
@click.option("--center", type=FLOATS, default="0,0")
@click.option("--r", "radius", type=float, default=1.0)
@click.option("--samples", type=int, default=512)
@click.option("--out", "output", default=None)
def trace(map_name, k, delta, value, base, center, radius, samples, output):
    """Sample a map on a circle and write angle,f1,f2 rows."""
    invocation = CliInvocation(
        subcommand="trace", map=selector(map_name, k, delta, value, base),
        center=center, radius=radius, samples=samples, output=output, format="csv",
    )
    result = circle_trace(invocation.map.build(), center, radius, samples)
    if output:
        result.to_csv(output)
    else:
        result.to_csv(sys.stdout)
    return EXIT_OK


@toolkit.command()
@map_options
@click.option("--center", type=FLOATS, default="0,0")
@click.option("--r", "radius", type=float, default=1.0)
@click.option("--p", "probe", type=FLOATS, default="0,0", help="Probe point p.")
@click.option("--samples", type=int, default=512)
@click.option("--out", "output", default=None)
def degree(map_name, k, delta, value, base, center, radius, probe, samples, output):
    """Winding degree of f(dB(center, r)) around p."""
    invocation = CliInvocation(
        subcommand="degree", map=selector(map_name, k, delta, value, base),
        center=center, radius=radius, samples=samples, output=output,
    )
    result = winding_degree(circle_trace(invocation.map.build(), center, radius, samples), probe)
    emit(result.model_dump(), output)
    return EXIT_OK


def _bump(phi_center, phi_radius) -> TestFunction:
    return TestFunction(center=phi_center, radius=phi_radius)


@toolkit.command()
@map_options
@click.option("--phi-center", type=FLOATS, default="0,0")
@click.option("--phi-radius", type=float, default=0.5)
@click.option("--domain-radius", type=float, default=1.0)
@click.option("--eps", type=FLOATS, default="0.08,0.04,0.02", help="Decreasing mollification scales.")
@click.option("--resolution", type=int, default=DEFAULT_RESOLUTION)
@click.option("--out", "output", default=None)
def jacobian(map_name, k, delta, value, base, phi_center, phi_radius, domain_radius, eps, resolution, output):
    """Distributional Jacobian pairing Jac(f)[phi] with its eps trend."""
    invocation = CliInvocation(
        subcommand="jacobian", map=selector(map_name, k, delta, value, base), radius=domain_radius, output=output,
    )
    domain = Domain.ball((0.0,) * len(phi_center), invocation.radius)
    result = jac_pairing(
        invocation.map.build(), _bump(phi_center, phi_radius), domain, eps, QuadratureSpec(sample_count=resolution)
    )
    emit(result.model_dump(), output)
    return EXIT_OK


@toolkit.command()
@map_options
@click.option("--phi-center", type=FLOATS, default="0,0")
@click.option("--phi-radius", type=float, default=0.5)
@click.option("--domain-radius", type=float, default=1.0)
@click.option("--resolution", type=int, default=DEFAULT_RESOLUTION)
@click.option("--out", "output", default=None)
def curl(map_name, k, delta, value, base, phi_center, phi_radius, domain_radius, resolution, output):
    """Distributional curl pairing curl(f)[phi]."""
    invocation = CliInvocation(
        subcommand="curl", map=selector(map_name, k, delta, value, base), radius=domain_radius, output=output,
    )
    phi = _bump(phi_center, phi_radius)
    pairing = curl_pairing(
        invocation.map.build(), phi, Domain.ball((0.0, 0.0), invocation.radius), QuadratureSpec(sample_count=resolution)
    )
    emit({"curl": pairing, "phi_integral": phi.integral()}, output)
    return EXIT_OK


@toolkit.command()
@map_options
@click.option("--domain-radius", type=float, default=1.0)
@click.option("--eps", type=FLOATS, default="0.08,0.04,0.02")
@click.option("--resolution", type=int, default=DEFAULT_RESOLUTION)
@click.option("--out", "output", default=None)
def classify(map_name, k, delta, value, base, domain_radius, eps, resolution, output):
    """Sign classification of Jac(f) over the default 5 x 5 bump family."""
    invocation = CliInvocation(
        subcommand="classify", map=selector(map_name, k, delta, value, base), radius=domain_radius, output=output,
    )
    result = sign_classify(
        invocation.map.build(), Domain.ball((0.0, 0.0), invocation.radius), None, eps,
        QuadratureSpec(sample_count=resolution),
    )
    emit(result.model_dump(), output)
    return EXIT_OK


def _suite_config(seed: int, checks, s_values, constants: Optional[str], timing: bool) -> SuiteConfig:
    return SuiteConfig(
        seeds=[seed],
        checks=list(checks) or None,
        s_values=list(s_values) if s_values else [0.75],
        constants_path=constants,
        record_timing=timing,
    )


def _write_reports(reports, output: Optional[str], fmt: str) -> None:
    if fmt == "csv":
        if output:
            with open(output, "w", newline="") as handle:
                write_summary_csv(reports, handle)
        else:
            write_summary_csv(reports, sys.stdout)
        return
    emit(reports_to_json(reports), output)


def _suite_exit(reports) -> int:
    return EXIT_FAILED if suite_failed(reports) else EXIT_OK


@toolkit.command()
@click.argument("prop_id")
@click.option("--seed", type=int, default=0)
@click.option("--s", "s_values", type=FLOATS, default=None)
@click.option("--constants", default=None, help="Path of the calibration constants file.")
@click.option("--out", "output", default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
def check(prop_id, seed, s_values, constants, output, fmt):
    """Run one check family (e.g. degree-oracle) or one check id."""
    CliInvocation(subcommand="check", output=output, format=fmt)
    config = _suite_config(seed, (), s_values, constants, False)
    reports = run_suite(config, selector=prop_id)
    if not reports:
        raise click.BadParameter(f"no check matches {prop_id!r}", param_hint="PROP_ID")
    _write_reports(reports, output, fmt)
    return _suite_exit(reports)


@toolkit.command()
@click.option("--seed", type=int, default=0)
@click.option("--checks", multiple=True, help="Restrict to these check families (repeatable).")
@click.option("--s", "s_values", type=FLOATS, default=None)
@click.option("--constants", default=None, help="Path of the calibration constants file.")
@click.option("--timing/--no-timing", default=False, help="Record wall-clock runtime per check.")
@click.option("--out", "output", default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
def suite(seed, checks, s_values, constants, timing, output, fmt):
    """Run every selected check and write the consolidated report."""
    CliInvocation(subcommand="suite", output=output, format=fmt)
    config = _suite_config(seed, checks, s_values, constants, timing)
    reports = run_suite(config)
    _write_reports(reports, output, fmt)
    return _suite_exit(reports)


@toolkit.command()
@click.option("--seed", type=int, default=0)
@click.option("--s", "s_values", type=FLOATS, default=None)
@click.option("--out", "output", default=None, help="Where to write the constants (defaults to TOOLKIT_CONSTANTS_PATH).")
def calibrate(seed, s_values, output):
    """Fit and freeze the constants of the regression checks."""
    CliInvocation(subcommand="calibrate", output=output)
    config = _suite_config(seed, (), s_values, output, False)
    constants = run_calibration(config, constants_path(config))
    emit(constants.model_dump(), None)
    return EXIT_OK


@toolkit.group(name="gallery")
def gallery_group():
    """Inspect the map gallery."""


@gallery_group.command(name="list")
def gallery_list():
    """List gallery names and their parameters."""
    for name, description in GALLERY_NAMES.items():
        click.echo(f"{name:24s} {description}")
    return EXIT_OK


def main(argv=None) -> int:
    """Entry point; returns 0 on success, 1 on invalid input, 2 when a check fails."""
    try:
        code = toolkit.main(args=argv, prog_name="sobolev-degree", standalone_mode=False)
    except click.ClickException as error:
        error.show()
        return EXIT_INVALID
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_INVALID
    except (ToolkitError, ValidationError) as error:
        click.echo(f"error: {error}", err=True)
        return EXIT_INVALID
    return code or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
