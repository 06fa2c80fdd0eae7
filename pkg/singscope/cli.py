"""singscope CLI"""

import argparse
import logging
import sys
from pathlib import Path
from typing import NoReturn

from singscope.classify import ClassificationReport, classify, normal_form
from singscope.config import ConfigLoader, configure_logging, parse_rational, verification_settings
from singscope.errors import FitInconclusiveError, InputError, SingScopeError
from singscope.exponents import predicted_pc
from singscope.families import FamilyInstance, render_catalog, resolve_family
from singscope.legendre import legendre_x2
from singscope.newton import newton_polyhedron_of
from singscope.poly import LatticePolynomial, TruncatedSeries, parse_series
from singscope.puiseux import cluster_tree_of, phase_second_derivative, resolve, transition_factorization_check
from singscope.report import (
    AnalysisReport,
    Section,
    classification_section,
    fit_entry,
    legendre_section,
    meta_section,
    resolution_section,
    summability_section,
    transition_entry,
)
from singscope.verify import (
    FitResult,
    VerificationSettings,
    Verdict,
    box_family_exponent,
    corput_decay,
    oscillatory_J,
    sublevel_exponent,
)

logger = logging.getLogger(__name__)

PROVISIONAL_ORDER = 32

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAIL = 3
EXIT_INCONCLUSIVE = 4


def exit_code(verdicts: list[Verdict]) -> int:
    """0 when every check passed, 3 on any failure, otherwise 4 for an inconclusive fit."""
    if Verdict.FAIL in verdicts:
        return EXIT_FAIL
    if Verdict.INCONCLUSIVE in verdicts:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def univariate_restriction(series: TruncatedSeries) -> LatticePolynomial:
    """The phase itself when it depends on x1 only, else phi(0, x2) written in x1."""
    poly = series.poly
    if poly.degree_in(1) == 0:
        return poly
    return LatticePolynomial({(j, 0): c for (_, j), c in poly.restrict_first().items()}, poly.vars)


class SingScopeCLI:
    """CLI for the singscope toolkit."""

    def __init__(self, config_path: Path | None = None) -> None:
        """
        Initialize the CLI with configuration loader.

        Args:
            config_path: Optional path to YAML config file (default: ~/.singscope/singscope.yaml)
        """
        self.config_loader = ConfigLoader(config_path=config_path)

    def read_expression(self, argument: str) -> tuple[str, FamilyInstance | None]:
        """
        Resolve the expression argument.

        Args:
            argument: Expression text, ``@family:key=value,...`` or a path to a file holding an expression

        Returns:
            The expression text and the family instance it came from, if any

        Raises:
            InputError: If a family reference is invalid or the file is empty
        """
        if argument.startswith("@"):
            instance = resolve_family(argument)
            return instance.expression, instance
        path = Path(argument)
        if path.is_file():
            text = path.read_text().strip()
            if not text:
                raise InputError(f"Expression file {path} is empty")
            return text, None
        return argument, None

    def working_order(self, text: str, configured: int) -> int:
        """The configured order, or 4n read off a provisional expansion when it is 0."""
        if configured:
            return configured
        n = normal_form(parse_series(text, PROVISIONAL_ORDER), PROVISIONAL_ORDER).n
        return 4 * n

    def _input_section(self, text: str, series: TruncatedSeries, instance: FamilyInstance | None) -> Section:
        section: Section = {"expression": text, "canonical": series.to_text(), "exact": series.exact}
        if instance is not None:
            section["family"] = instance.label
        return section

    def analyze(self, config: argparse.Namespace) -> AnalysisReport:
        """
        Classify, transform, resolve and predict p_c; run the fits when ``--verify`` is given.

        Raises:
            SingScopeError: From whichever stage fails
        """
        text, instance = self.read_expression(config.expression)
        order = self.working_order(text, config.order)
        series = parse_series(text, order)
        report = classify(series, order, text)
        data = legendre_x2(series, order, report)
        phase = phase_second_derivative(data.phi1)
        resolution = resolve(phase, config.max_steps)
        try:
            tree: str | None = cluster_tree_of(phase, config.depth).render()
        except (ValueError, ArithmeticError) as e:
            logger.warning("cluster tree unavailable: %s", e)
            tree = f"unavailable: {e}"

        result = AnalysisReport(
            input=self._input_section(text, series, instance),
            meta=meta_section(config, order),
            classification=classification_section(report),
            legendre=legendre_section(data),
            resolution=resolution_section(phase.to_text(), resolution, tree),
        )
        if report.exceptional_condition is None:
            summability = predicted_pc(resolution, report)
            if summability.p_c != report.p_c:
                logger.warning("predicted p_c %s differs from the classification's %s", summability.p_c, report.p_c)
            result.summability = summability_section(summability, report.p_c)

        if config.verify:
            settings = verification_settings(config)
            fits = [
                sublevel_exponent(
                    series, settings.deltas, settings.grid, settings.tolerance, settings.epsilon, report, order
                )
            ]
            fits.extend(self.box_fits(series, report, order, settings))
            result.verification = [fit_entry(fit) for fit in fits]
        return result

    def box_fits(
        self,
        series: TruncatedSeries,
        report: ClassificationReport,
        order: int,
        settings: VerificationSettings,
        k: int | None = None,
        p: str | None = None,
    ) -> list[FitResult]:
        """Box-family fits at the given p, or at each family's necessary exponent."""
        necessary = report.necessary_exponents
        ks = [k] if k is not None else sorted(int(key[1:]) for key in necessary)
        fits: list[FitResult] = []
        for index in ks:
            if p is not None:
                exponent = parse_rational(p)
            elif f"k{index}" in necessary:
                exponent = necessary[f"k{index}"]
            else:
                raise InputError(f"Box family k={index} needs --p: no necessary exponent is known for it")
            fits.append(
                box_family_exponent(
                    series,
                    index,
                    exponent,
                    settings.deltas,
                    settings.grid,
                    settings.box_tolerance,
                    settings.epsilon,
                    report,
                    order,
                )
            )
        return fits

    def verify(self, config: argparse.Namespace) -> AnalysisReport:
        """
        Run the requested numeric check.

        Raises:
            SingScopeError: From the classification or the check itself
        """
        text, instance = self.read_expression(config.expression)
        order = self.working_order(text, config.order)
        series = parse_series(text, order)
        settings = verification_settings(config)
        result = AnalysisReport(input=self._input_section(text, series, instance), meta=meta_section(config, order))

        if config.which == "corput":
            fit = corput_decay(univariate_restriction(series), config.m, settings.lambdas, settings.tolerance)
            result.verification = [fit_entry(fit)]
            return result

        report = classify(series, order, text)
        result.classification = classification_section(report)
        if config.which == "sublevel":
            fit = sublevel_exponent(
                series, settings.deltas, settings.grid, settings.tolerance, settings.epsilon, report, order
            )
            result.verification = [fit_entry(fit)]
        elif config.which == "boxes":
            fits = self.box_fits(series, report, order, settings, config.k, config.p)
            result.verification = [fit_entry(fit) for fit in fits]
        else:
            data = legendre_x2(series, order, report)
            result.legendre = legendre_section(data)
            phase = phase_second_derivative(data.phi1)
            if config.which == "oscillatory":
                k = config.k if config.k is not None else 8
                fit = oscillatory_J(data.phi1, newton_polyhedron_of(phase), config.j, k)
                result.verification = [fit_entry(fit)]
            else:
                check = transition_factorization_check(
                    phase, config.vertex, config.transition_m, config.samples, config.seed
                )
                result.verification = [transition_entry(check, config.transition_m)]
        return result

    def emit(self, result: AnalysisReport, config: argparse.Namespace) -> None:
        """Print the summary and write the requested files."""
        if config.json is not None and str(config.json) == "-":
            print(result.to_json(), end="")
        else:
            print(result.summary())
            if config.json is not None:
                result.save(config.json)
        if config.csv is not None:
            result.write_csv(config.csv)

    def execute(self, args: list[str] | None = None) -> int:
        """
        Execute the CLI with the given arguments.

        Args:
            args: Optional list of arguments (defaults to sys.argv)

        Returns:
            Exit code: 0 all checks passed, 1 error, 3 a check failed, 4 a fit was inconclusive
        """
        try:
            config = self.config_loader.get_config(args)
            configure_logging(config)
            if config.command == "families":
                print(render_catalog())
                return EXIT_OK
            result = self.analyze(config) if config.command == "analyze" else self.verify(config)
            self.emit(result, config)
            return exit_code(result.verdicts)
        except FitInconclusiveError as e:
            print(f"{e.module} error: {e}", file=sys.stderr)
            return EXIT_INCONCLUSIVE
        except SingScopeError as e:
            print(f"{e.module} error: {e}", file=sys.stderr)
            return EXIT_ERROR
        except ValueError as e:
            print(f"Configuration error: {e}", file=sys.stderr)
            return EXIT_ERROR


def main() -> int:
    """Main CLI entry point."""
    cli = SingScopeCLI()
    return cli.execute()


def cli_entrypoint() -> NoReturn:
    """Entry point for console script."""
    sys.exit(main())


if __name__ == "__main__":
    cli_entrypoint()
