"""Tests for the singscope CLI."""

import json
import tempfile
from fractions import Fraction
from pathlib import Path
from unittest.mock import MagicMock, patch

from singscope import cli
from singscope.errors import FitInconclusiveError
from singscope.families import render_catalog
from singscope.poly import parse_series
from singscope.report import AnalysisReport
from singscope.verify import FitResult, Mode, Verdict

FAST_DECAY = ["--lambda-max", "2^14", "--points", "6"]


def _printed(mock_print: MagicMock) -> str:
    return "\n".join(str(c.args[0]) for c in mock_print.call_args_list if c.args)


class TestHelpers:
    """Test cases for the module-level helpers."""

    def test_exit_code(self) -> None:
        """Test that FAIL takes precedence over INCONCLUSIVE."""
        assert cli.exit_code([]) == 0
        assert cli.exit_code([Verdict.PASS, Verdict.PASS]) == 0
        assert cli.exit_code([Verdict.PASS, Verdict.INCONCLUSIVE]) == 4
        assert cli.exit_code([Verdict.INCONCLUSIVE, Verdict.FAIL]) == 3

    def test_univariate_restriction(self) -> None:
        """Test phi(0, x2) written in x1, and a phase already in x1."""
        restricted = cli.univariate_restriction(parse_series("x2^2 + x1^4 + x1*x2^3", 16))
        assert restricted == parse_series("x1^2", 16).poly
        assert cli.univariate_restriction(parse_series("x1^3", 8)) == parse_series("x1^3", 8).poly


class TestSingScopeCLIClass:
    """Test cases for SingScopeCLI class."""

    def test_cli_init_creates_config_loader(self) -> None:
        """Test that CLI initialization creates config loader."""
        cli_instance = cli.SingScopeCLI()
        assert cli_instance.config_loader is not None
        assert cli_instance.config_loader.parser.description is not None
        assert "A-type singularities" in cli_instance.config_loader.parser.description

    def test_cli_init_with_custom_config_path(self) -> None:
        """Test that CLI initialization accepts custom config path."""
        custom_path = Path("/tmp/custom.yaml")
        cli_instance = cli.SingScopeCLI(config_path=custom_path)
        assert cli_instance.config_loader.config_path == custom_path

    def test_read_expression_text(self) -> None:
        """Test that plain text is returned unchanged."""
        assert cli.SingScopeCLI().read_expression("x2^2 + x1^4") == ("x2^2 + x1^4", None)

    def test_read_expression_family(self) -> None:
        """Test that a family reference expands to its expression."""
        text, instance = cli.SingScopeCLI().read_expression("@pure:n=5")
        assert instance is not None
        assert text == instance.expression

    def test_read_expression_file(self) -> None:
        """Test reading the expression from a file."""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "phi.txt"
            path.write_text("x2^2 + x1^5\n")
            assert cli.SingScopeCLI().read_expression(str(path)) == ("x2^2 + x1^5", None)

    def test_working_order(self) -> None:
        """Test that order 0 means 4n."""
        cli_instance = cli.SingScopeCLI()
        assert cli_instance.working_order("(x2 - x1^2)^2 + x1^5", 0) == 20
        assert cli_instance.working_order("(x2 - x1^2)^2 + x1^5", 12) == 12


class TestExecute:
    """Test cases for SingScopeCLI.execute."""

    def test_families(self) -> None:
        """Test that the families command prints the catalog."""
        with tempfile.TemporaryDirectory() as tmpdir:
            cli_instance = cli.SingScopeCLI(config_path=Path(tmpdir) / "test.yaml")
            with patch("builtins.print") as mock_print:
                result = cli_instance.execute(["families"])
            assert result == 0
            mock_print.assert_called_once_with(render_catalog())

    def test_analyze_a_minus(self) -> None:
        """Test the printed summary of the shifted parabola."""
        with tempfile.TemporaryDirectory() as tmpdir:
            cli_instance = cli.SingScopeCLI(config_path=Path(tmpdir) / "test.yaml")
            with patch("builtins.print") as mock_print:
                result = cli_instance.execute(["analyze", "(x2 - x1^2)^2 + x1^5"])
            assert result == 0
            output = _printed(mock_print)
            assert "class: A_minus  n=5  m=2" in output
            assert "h = 10/7  p_c = 3/2" in output
            assert "predicted p_c = 3/2" in output

    def test_analyze_writes_json(self) -> None:
        """Test the JSON report file of an A+ phase."""
        with tempfile.TemporaryDirectory() as tmpdir:
            report_path = Path(tmpdir) / "report.json"
            cli_instance = cli.SingScopeCLI(config_path=Path(tmpdir) / "test.yaml")
            with patch("builtins.print"):
                result = cli_instance.execute(["analyze", "@pure:n=5", "--json", str(report_path)])
            assert result == 0
            report = AnalysisReport.load(report_path)
            assert report.classification is not None
            assert report.classification["class"] == "A_plus_generic"
            assert report.classification["n_e"] == {"value": "5", "provenance": "exact"}
            assert report.summability is not None
            assert report.summability["predicted_pc"]["value"] == "5/3"
            assert report.summability["agrees_with_classification"] is True
            assert report.input["family"].startswith("@pure")
            assert report.meta["order"] == 20

    def test_analyze_json_to_stdout(self) -> None:
        """Test that --json - prints only the report."""
        with tempfile.TemporaryDirectory() as tmpdir:
            cli_instance = cli.SingScopeCLI(config_path=Path(tmpdir) / "test.yaml")
            with patch("builtins.print") as mock_print:
                result = cli_instance.execute(["analyze", "x2^2 + x1^4", "--json", "-"])
            assert result == 0
            mock_print.assert_called_once()
            data = json.loads(mock_print.call_args[0][0])
            assert data["classification"]["p_c"]["value"] == "8/5"
            assert data["summability"]["predicted_pc"]["value"] == "8/5"
            assert data["meta"]["schema"] == "singscope/1"

    def test_cluster_tree_failure_is_recorded(self) -> None:
        """Test that an arithmetic failure in the cluster tree leaves the analysis intact."""
        with tempfile.TemporaryDirectory() as tmpdir:
            cli_instance = cli.SingScopeCLI(config_path=Path(tmpdir) / "test.yaml")
            with (
                patch("singscope.cli.cluster_tree_of", side_effect=ZeroDivisionError("division by zero")),
                patch("builtins.print") as mock_print,
            ):
                result = cli_instance.execute(["analyze", "(x2 - x1^2)^2 + x1^5", "--json", "-"])
            assert result == 0
            data = json.loads(mock_print.call_args[0][0])
            assert data["resolution"]["cluster_tree"] == "unavailable: division by zero"
            assert data["summability"]["predicted_pc"]["value"] == "3/2"

    def test_hessian_error(self) -> None:
        """Test that a non-degenerate Hessian is reported by module."""
        with tempfile.TemporaryDirectory() as tmpdir:
            cli_instance = cli.SingScopeCLI(config_path=Path(tmpdir) / "test.yaml")
            with patch("builtins.print") as mock_print:
                result = cli_instance.execute(["analyze", "x1^2"])
            assert result == 1
            mock_print.assert_called_once()
            assert mock_print.call_args[0][0].startswith("classify error:")

    def test_syntax_error(self) -> None:
        """Test that a parse failure names the offset."""
        with tempfile.TemporaryDirectory() as tmpdir:
            cli_instance = cli.SingScopeCLI(config_path=Path(tmpdir) / "test.yaml")
            with patch("builtins.print") as mock_print:
                result = cli_instance.execute(["analyze", "x1 + ", "--order", "8"])
            assert result == 1
            message = mock_print.call_args[0][0]
            assert message.startswith("poly-core error:")
            assert "offset 5" in message

    def test_empty_expression_file(self) -> None:
        """Test that an empty expression file is an input error."""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "empty.txt"
            path.write_text("\n")
            cli_instance = cli.SingScopeCLI(config_path=Path(tmpdir) / "test.yaml")
            with patch("builtins.print") as mock_print:
                result = cli_instance.execute(["analyze", str(path)])
            assert result == 1
            assert mock_print.call_args[0][0].startswith("cli error:")

    def test_configuration_error(self) -> None:
        """Test that an out-of-range epsilon is a configuration error."""
        with tempfile.TemporaryDirectory() as tmpdir:
            cli_instance = cli.SingScopeCLI(config_path=Path(tmpdir) / "test.yaml")
            with patch("builtins.print") as mock_print:
                result = cli_instance.execute(["analyze", "x2^2 + x1^4", "--epsilon", "2"])
            assert result == 1
            message = mock_print.call_args[0][0]
            assert "Configuration error:" in message
            assert "epsilon must lie in (0, 1]" in message


class TestVerifyCommand:
    """Test cases for the verify sub-command."""

    def test_corput(self) -> None:
        """Test the van der Corput check on phi(0, x2) = x2^2."""
        with tempfile.TemporaryDirectory() as tmpdir:
            csv_path = Path(tmpdir) / "points.csv"
            cli_instance = cli.SingScopeCLI(config_path=Path(tmpdir) / "test.yaml")
            with patch("builtins.print") as mock_print:
                result = cli_instance.execute(
                    ["verify", "x2^2 + x1^4", "corput", "--csv", str(csv_path), *FAST_DECAY]
                )
            assert result == 0
            assert "corput:" in _printed(mock_print)
            rows = csv_path.read_text().splitlines()
            assert rows[0] == "kind,log2_x,log2_value"
            assert len(rows) == 7

    def test_sublevel(self) -> None:
        """Test the sublevel check of x2^2 + x1^4."""
        with tempfile.TemporaryDirectory() as tmpdir:
            cli_instance = cli.SingScopeCLI(config_path=Path(tmpdir) / "test.yaml")
            with patch("builtins.print") as mock_print:
                result = cli_instance.execute(["verify", "x2^2 + x1^4", "sublevel"])
            assert result == 0
            assert "(predicted 3/4, equal) PASS" in _printed(mock_print)

    def test_slab_boxes(self) -> None:
        """Test the k=2 box family at p = 8/5."""
        with tempfile.TemporaryDirectory() as tmpdir:
            cli_instance = cli.SingScopeCLI(config_path=Path(tmpdir) / "test.yaml")
            with patch("builtins.print") as mock_print:
                result = cli_instance.execute(["verify", "x2^2 + x1^4", "boxes", "--k", "2", "--p", "8/5"])
            assert result == 0
            assert "box_k2:" in _printed(mock_print)

    def test_box_family_without_exponent(self) -> None:
        """Test that the k=1 family of an A- phase needs --p."""
        with tempfile.TemporaryDirectory() as tmpdir:
            cli_instance = cli.SingScopeCLI(config_path=Path(tmpdir) / "test.yaml")
            with patch("builtins.print") as mock_print:
                result = cli_instance.execute(["verify", "(x2 - x1^2)^2 + x1^5", "boxes", "--k", "1"])
            assert result == 1
            assert "needs --p" in mock_print.call_args[0][0]

    def test_transition(self) -> None:
        """Test the transition check at the horizontal vertex of 20 z^3 + 2 s."""
        with tempfile.TemporaryDirectory() as tmpdir:
            cli_instance = cli.SingScopeCLI(config_path=Path(tmpdir) / "test.yaml")
            with patch("builtins.print") as mock_print:
                result = cli_instance.execute(["verify", "(x2 - x1^2)^2 + x1^5", "transition", "--json", "-"])
            assert result == 0
            data = json.loads(mock_print.call_args[0][0])
            assert data["verification"][0]["vertex"] == ["3", "0"]
            assert data["verification"][0]["value_min"]["provenance"] == "fitted"
            assert data["legendre"]["route"] == "A_minus_adapted"

    def test_failed_check_exits_three(self) -> None:
        """Test the exit code of a failed fit."""
        failed = FitResult("corput", -0.1, 0.01, (1.0, 2.0), (), Fraction(-1, 2), 0.05, Mode.EQUAL)
        with tempfile.TemporaryDirectory() as tmpdir:
            cli_instance = cli.SingScopeCLI(config_path=Path(tmpdir) / "test.yaml")
            with patch("singscope.cli.corput_decay", return_value=failed), patch("builtins.print"):
                result = cli_instance.execute(["verify", "x1^2", "corput", "--order", "8"])
            assert result == 3

    def test_inconclusive_fit_exits_four(self) -> None:
        """Test the exit code when a fit cannot be made."""
        with tempfile.TemporaryDirectory() as tmpdir:
            cli_instance = cli.SingScopeCLI(config_path=Path(tmpdir) / "test.yaml")
            with (
                patch("singscope.cli.sublevel_exponent", side_effect=FitInconclusiveError("too noisy")),
                patch("builtins.print") as mock_print,
            ):
                result = cli_instance.execute(["verify", "x2^2 + x1^4", "sublevel"])
            assert result == 4
            assert mock_print.call_args[0][0] == "geo-verify error: too noisy"


class TestSingScopeCLI:
    """Test cases for the entry points."""

    def test_main_uses_default_config(self) -> None:
        """Test that main() builds a CLI and returns its exit code."""
        with patch("singscope.cli.SingScopeCLI") as mock_cli:
            mock_cli.return_value.execute.return_value = 0
            assert cli.main() == 0
            mock_cli.assert_called_once_with()

    def test_cli_entrypoint(self) -> None:
        """Test cli_entrypoint calls sys.exit with main() result."""
        with (
            patch("singscope.cli.main") as mock_main,
            patch("sys.exit") as mock_exit,
        ):
            mock_main.return_value = 0
            try:
                cli.cli_entrypoint()
            except SystemExit:
                pass
            mock_main.assert_called_once()
            mock_exit.assert_called_once_with(0)


class TestMainModule:
    """Test cases for __main__ module."""

    def test_main_module_calls_cli_entrypoint(self) -> None:
        """Test that __main__ module calls cli_entrypoint when run as __main__."""
        import subprocess
        import sys

        result = subprocess.run(
            [sys.executable, "-m", "singscope", "--help"],
            capture_output=True,
            text=True,
        )

        assert result.returncode == 0
        assert "A-type singularities" in result.stdout
        assert "analyze" in result.stdout
        assert "verify" in result.stdout
