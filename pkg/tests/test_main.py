"""Unit tests for the command-line interface."""

import os

import pandas as pd
import pytest
from click.testing import CliRunner

from homogenize.__main__ import cli
from homogenize.exceptions import ConvergenceError, SweepError
from homogenize.multiscale_exp import PairingRow
from homogenize.semilinear import AprioriCheck


@pytest.fixture
def runner():
    return CliRunner()


def _invoke(runner, config_file, *args):
    return runner.invoke(cli, ["--config", config_file, *args])


class TestCellCommand:
    """Test cases for the cell command."""

    def test_writes_tensor_to_directory(self, runner, small_config_file):
        with runner.isolated_filesystem():
            result = _invoke(runner, small_config_file, "--out", "run", "cell")
            assert result.exit_code == 0, result.output
            assert "a0 = " in result.output
            assert "Hashin-Shtrikman" in result.output
            frame = pd.read_csv(os.path.join("run", "tensor.csv"), header=None)
            assert frame.shape == (2, 2)

    def test_csv_out_is_the_tensor_file(self, runner, small_config_file):
        with runner.isolated_filesystem():
            result = _invoke(runner, small_config_file, "--out", "a0.csv", "cell")
            assert result.exit_code == 0, result.output
            assert os.path.exists("a0.csv")

    def test_failed_bound_check_exits_1(self, runner, small_config_file, mocker):
        """Test that a failing invariant check gives exit code 1."""
        mocker.patch("homogenize.__main__.check_tensor_bounds", return_value="eigenvalue too large")
        with runner.isolated_filesystem():
            result = _invoke(runner, small_config_file, "cell")
        assert result.exit_code == 1
        assert "eigenvalue too large" in result.output


class TestSolveCommand:
    """Test cases for the solve command."""

    def test_fine(self, runner, small_config_file):
        """Test a fine-scale solve with a fractional eps."""
        with runner.isolated_filesystem():
            result = _invoke(runner, small_config_file, "solve", "--fine", "1/4")
            assert result.exit_code == 0, result.output
            frame = pd.read_csv(os.path.join("results", "solution.csv"))
            assert list(frame.columns) == ["node", "x1", "x2", "u"]
            # n = cells_per_period / eps = 32
            assert len(frame) == 33 * 33

    def test_homogenized_with_vtk(self, runner, small_config_file):
        with runner.isolated_filesystem():
            result = _invoke(runner, small_config_file, "solve", "--homogenized", "--vtk")
            assert result.exit_code == 0, result.output
            assert os.path.exists(os.path.join("results", "solution.vtk"))

    def test_needs_exactly_one_mode(self, runner, small_config_file):
        with runner.isolated_filesystem():
            result = _invoke(runner, small_config_file, "solve")
        assert result.exit_code == 2

    def test_bad_eps(self, runner, small_config_file):
        """Test that eps = 0.3 is rejected with the error exit code."""
        with runner.isolated_filesystem():
            result = _invoke(runner, small_config_file, "solve", "--fine", "0.3")
        assert result.exit_code == 2
        assert "1/k" in result.output

    def test_apriori_failure_exits_1(self, runner, small_config_file, mocker):
        mocker.patch(
            "homogenize.__main__.apriori_check", return_value=AprioriCheck(1.0, 0.5, False)
        )
        with runner.isolated_filesystem():
            result = _invoke(runner, small_config_file, "solve", "--fine", "1/2")
        assert result.exit_code == 1


class TestSweepCommand:
    """Test cases for the sweep command."""

    def test_writes_csv_and_plot_script(self, runner, small_config_file):
        with runner.isolated_filesystem():
            result = _invoke(runner, small_config_file, "sweep")
            assert result.exit_code == 0, result.output
            frame = pd.read_csv(os.path.join("results", "errors.csv"))
            assert list(frame["eps"]) == [0.5, 0.25]
            assert os.path.exists(os.path.join("results", "plot_errors.py"))

    def test_growing_gradient_pairing_gap_exits_1(self, runner, small_config_file, mocker):
        """Test that the gradient pairing gap is recorded as a sweep check."""
        mocker.patch(
            "homogenize.multiscale_exp.gradient_pairing_check",
            side_effect=lambda u_eps, mesh, u0, cells, eps, phi: PairingRow(
                eps=eps, lhs=0.0, rhs=0.0, gap=1e-3 / eps
            ),
        )
        with runner.isolated_filesystem():
            result = _invoke(runner, small_config_file, "sweep")
        assert result.exit_code == 1
        assert "gradient pairing gap non-increasing (eps=0.25)" in result.output

    def test_out_overrides_output_dir(self, runner, small_config_file):
        with runner.isolated_filesystem():
            result = _invoke(runner, small_config_file, "--out", "nested/run", "sweep")
            assert result.exit_code == 0, result.output
            assert os.path.exists(os.path.join("nested", "run", "errors.csv"))
            assert not os.path.exists("results")

    def test_sweep_error_exits_2(self, runner, small_config_file, mocker):
        """Test that a failing row prints a suggestion and exits with 2."""
        mocker.patch(
            "homogenize.__main__.run_epsilon_sweep",
            side_effect=SweepError(0.25, ConvergenceError("CG", 10, 1.0)),
        )
        with runner.isolated_filesystem():
            result = _invoke(runner, small_config_file, "sweep")
        assert result.exit_code == 2
        assert "homogenize solve --fine 0.25" in result.output


class TestPairingAndVerify:
    """Test cases for the pairing and verify commands."""

    @pytest.mark.parametrize("phi", ["one", "x1", "sine"])
    def test_pairing(self, runner, small_config_file, phi):
        with runner.isolated_filesystem():
            result = _invoke(runner, small_config_file, "pairing", "--phi", phi)
        assert result.exit_code == 0, result.output
        assert "gap" in result.output

    def test_verify_passes(self, runner, small_config_file):
        with runner.isolated_filesystem():
            result = _invoke(runner, small_config_file, "verify")
        assert result.exit_code == 0, result.output
        assert "checks passed" in result.output

    def test_missing_config_exits_2(self, runner, tmp_path):
        result = runner.invoke(cli, ["--config", str(tmp_path / "absent.cfg"), "cell"])
        assert result.exit_code == 2
        assert "not found" in result.output
