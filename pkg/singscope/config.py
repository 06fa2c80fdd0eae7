"""Configuration management for singscope."""

import argparse
import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

from ruamel.yaml import YAML

from singscope.verify import VerificationSettings, dyadic_range

_POWER = re.compile(r"^\s*(-?\d+)\s*\^\s*(-?\d+)\s*$")

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

VERIFY_CHECKS = ("sublevel", "boxes", "corput", "oscillatory", "transition")


def parse_rational(value: Any) -> Fraction:
    """
    Parse ``a``, ``a/b``, ``2^k`` or a decimal into an exact rational.

    Raises:
        ValueError: If the text is none of these
    """
    if isinstance(value, bool):
        raise ValueError(f"Expected a rational, got {value}")
    if isinstance(value, int | float | Fraction):
        return Fraction(value)
    text = str(value)
    match = _POWER.match(text)
    if match:
        return Fraction(int(match.group(1))) ** int(match.group(2))
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"Expected a rational such as 3, 8/5 or 2^-12, got '{text}'") from e


@dataclass
class Parameter:
    """Definition of a configuration parameter."""

    name: str
    type: type
    default: Any
    help: str
    minimum: Any = None

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")


class ConfigLoader:
    """Unified configuration loader that handles both CLI args and YAML file."""

    def __init__(self, config_path: Path | None = None) -> None:
        """
        Initialize the configuration loader.

        Args:
            config_path: Path to YAML config file (default: ~/.singscope/singscope.yaml)
        """
        self.config_path = config_path or Path.home() / ".singscope" / "singscope.yaml"
        self.yaml = YAML()
        self.yaml.preserve_quotes = True
        self.yaml.default_flow_style = False

        self.parameters = [
            Parameter("order", int, 0, "Series truncation order (0 means 4n)", 0),
            Parameter("depth", int, 6, "Puiseux expansion depth", 1),
            Parameter("max_steps", int, 20, "Resolution step limit", 1),
            Parameter("seed", int, 0, "Random seed for sampled checks", 0),
            Parameter("grid", int, 256, "Grid size of measure sweeps", 64),
            Parameter("tolerance", float, 0.05, "Accepted deviation of fitted exponents", 0.0),
            Parameter("box_tolerance", float, 0.1, "Accepted deviation of box-family thresholds", 0.0),
            Parameter("epsilon", Fraction, "1/4", "Size of the neighbourhood of the origin"),
            Parameter("delta_min", Fraction, "2^-26", "Smallest delta of measure sweeps"),
            Parameter("delta_max", Fraction, "2^-12", "Largest delta of measure sweeps"),
            Parameter("lambda_min", Fraction, "2^6", "Smallest frequency of decay sweeps"),
            Parameter("lambda_max", Fraction, "2^20", "Largest frequency of decay sweeps"),
            Parameter("points", int, 8, "Number of dyadic sample points per sweep", 6),
            Parameter("transition_m", int, 8, "Domain constant M of transition checks", 1),
            Parameter("samples", int, 64, "Samples per transition domain", 1),
            Parameter("log_level", str, "WARNING", "Logging level"),
        ]

        self.parser = self._build_parser()

    def _add_parameters(self, parser: argparse.ArgumentParser) -> None:
        for param in self.parameters:
            parser.add_argument(
                param.flag,
                type=str if param.type == Fraction else param.type,
                default=param.default,
                help=param.help,
                dest=param.name,
            )
        parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level")

    def _build_parser(self) -> argparse.ArgumentParser:
        """
        Build ArgumentParser from parameter definitions.

        Returns:
            Configured ArgumentParser instance
        """
        parser = argparse.ArgumentParser(
            prog="singscope",
            description="singscope - exact invariants and numeric checks for A-type singularities",
            formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        )
        common = argparse.ArgumentParser(add_help=False, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        self._add_parameters(common)
        commands = parser.add_subparsers(dest="command", required=True)

        analyze = commands.add_parser(
            "analyze",
            parents=[common],
            help="Classify a phase and predict its critical exponent",
            formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        )
        analyze.add_argument("expression", help="Expression, path to a file holding one, or @family:key=value")
        analyze.add_argument("--verify", action="store_true", help="Also run the sublevel and box-family fits")
        analyze.add_argument("--json", type=Path, default=None, help="Write the JSON report to this path")
        analyze.add_argument("--csv", type=Path, default=None, help="Write fitted sample points to this path")

        verify = commands.add_parser(
            "verify",
            parents=[common],
            help="Run one numeric check",
            formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        )
        verify.add_argument("expression", help="Expression, path to a file holding one, or @family:key=value")
        verify.add_argument("which", choices=VERIFY_CHECKS, help="Check to run")
        verify.add_argument(
            "--k", type=int, default=None, help="Box family 0, 1 or 2 (boxes); dyadic index of s2 (oscillatory)"
        )
        verify.add_argument("--p", type=str, default=None, help="Lebesgue exponent (boxes)")
        verify.add_argument("--m", type=int, default=2, help="Derivative order (corput)")
        verify.add_argument("--j", type=int, default=8, help="Dyadic index j (oscillatory)")
        verify.add_argument("--vertex", type=int, default=0, help="Vertex index (transition)")
        verify.add_argument("--json", type=Path, default=None, help="Write the JSON report to this path")
        verify.add_argument("--csv", type=Path, default=None, help="Write fitted sample points to this path")

        commands.add_parser("families", parents=[common], help="List the named model families")
        return parser

    def _load_yaml(self) -> dict[str, Any]:
        """
        Load configuration from YAML file.

        Creates file with defaults if it doesn't exist.

        Returns:
            Dictionary of configuration values from YAML

        Raises:
            ValueError: If YAML file is invalid
        """
        self.config_path.parent.mkdir(parents=True, exist_ok=True)

        if not self.config_path.exists():
            defaults = {param.name: param.default for param in self.parameters}
            with open(self.config_path, "w") as f:
                self.yaml.dump(defaults, f)
            return defaults

        try:
            with open(self.config_path) as f:
                data = self.yaml.load(f)
        except Exception as e:
            raise ValueError(f"Failed to load YAML config from {self.config_path}: {e}") from e
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ValueError(f"Failed to load YAML config from {self.config_path}: expected a mapping")
        return data

    def _validate_value(self, param: Parameter, value: Any) -> Any:
        """
        Validate and convert a configuration value.

        Args:
            param: Parameter definition
            value: Value to validate

        Returns:
            Validated and converted value

        Raises:
            ValueError: If value is invalid
        """
        if param.type == Fraction:
            return parse_rational(value)
        if param.type == str:
            result = str(value).upper()
            if param.name == "log_level" and result not in LOG_LEVELS:
                raise ValueError(f"log_level must be one of {', '.join(LOG_LEVELS)}, got {value}")
            return result
        try:
            result = param.type(value)
        except (ValueError, TypeError) as e:
            raise ValueError(
                f"Invalid value for '{param.name}' in {self.config_path}: "
                f"expected {param.type.__name__}, got {type(value).__name__} ({value})"
            ) from e
        if param.minimum is not None and result < param.minimum:
            raise ValueError(f"{param.name} must be at least {param.minimum}, got {result}")
        return result

    def _check_ranges(self, config: dict[str, Any]) -> None:
        if not 0 < config["epsilon"] <= 1:
            raise ValueError(f"epsilon must lie in (0, 1], got {config['epsilon']}")
        for low, high in (("delta_min", "delta_max"), ("lambda_min", "lambda_max")):
            if not 0 < config[low] < config[high]:
                raise ValueError(f"Need 0 < {low} < {high}, got {config[low]} and {config[high]}")
        if config["delta_max"] >= 1:
            raise ValueError(f"delta_max must be below 1, got {config['delta_max']}")

    def _update_yaml_file(self, yaml_config: dict[str, Any]) -> None:
        """
        Update YAML file with missing parameters.

        Preserves comments and formatting.

        Args:
            yaml_config: Current YAML configuration
        """
        for param in self.parameters:
            if param.name not in yaml_config:
                yaml_config[param.name] = param.default

        with open(self.config_path, "w") as f:
            self.yaml.dump(yaml_config, f)

    def get_config(self, args: list[str] | None = None) -> argparse.Namespace:
        """
        Get merged configuration from YAML and CLI args.

        Precedence: CLI args > YAML file > defaults

        Args:
            args: Optional CLI arguments (defaults to sys.argv)

        Returns:
            Namespace with final configuration values and the sub-command arguments

        Raises:
            ValueError: If configuration is invalid
        """
        yaml_config = self._load_yaml()
        self._update_yaml_file(yaml_config)

        cli_args = self.parser.parse_args(args)
        final_config = vars(cli_args).copy()

        for param in self.parameters:
            cli_value = getattr(cli_args, param.name)
            # A CLI value equal to the default means the flag was not given
            if cli_value == param.default and param.name in yaml_config:
                final_config[param.name] = self._validate_value(param, yaml_config[param.name])
            else:
                final_config[param.name] = self._validate_value(param, cli_value)

        self._check_ranges(final_config)
        if final_config["verbose"]:
            final_config["log_level"] = "DEBUG"
        return argparse.Namespace(**final_config)


def configure_logging(config: argparse.Namespace) -> None:
    logging.basicConfig(level=getattr(logging, config.log_level), format="%(levelname)s %(name)s: %(message)s")


def verification_settings(config: argparse.Namespace) -> VerificationSettings:
    """Sweep settings described by a merged configuration."""
    return VerificationSettings(
        grid=config.grid,
        epsilon=float(config.epsilon),
        deltas=tuple(dyadic_range(float(config.delta_min), float(config.delta_max), config.points)),
        lambdas=tuple(dyadic_range(float(config.lambda_min), float(config.lambda_max), config.points)),
        tolerance=config.tolerance,
        box_tolerance=config.box_tolerance,
    )
