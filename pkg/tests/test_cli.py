"""End-to-end tests of the kdilation command line."""

import json
from pathlib import Path
from typing import Any

import pandas as pd
import pytest
from pytest_mock import MockerFixture

from kdilation.dilation import SweepPoint
from kdilation.main import EXIT_ACCEPTANCE, EXIT_LEDGER_MISS, EXIT_OK, EXIT_USAGE, async_main


@pytest.fixture
def out(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    """Report directory, with the working directory moved away from any .env file."""
    monkeypatch.chdir(tmp_path)
    for name in ("KDILATION_SEED", "KDILATION_DILATION__BUDGET", "KDILATION_OUTPUT__FORMAT"):
        monkeypatch.delenv(name, raising=False)
    return tmp_path / "reports"


def read_report(out: Path, command: str) -> dict[str, Any]:
    return json.loads((out / f"{command}.json").read_text(encoding="utf-8"))


def fake_sweep_point(descriptor: Any, f1: Any, f2: Any, k: int, epsilon: float, budget: int, *rest: Any) -> SweepPoint:
    """Estimate exactly ε, a perfect slope-1 sweep."""
    return SweepPoint(epsilon=epsilon, estimate=epsilon, budget=budget, ascent_steps=0, predicted_bound=None)


class TestLedgerCommands:
    """Test filtration and targets."""

    async def test_filtration(self, out: Path) -> None:
        """Test that V_4 π_7(S^4) is answered from the ledger."""
        assert await async_main(["filtration", "--m", "7", "--n", "4", "--out", str(out)]) == EXIT_OK
        report = read_report(out, "filtration")
        assert report["source"] == "homotopy-ledger"
        assert report["payload"]["group"] == "Z+Z12"
        assert "Toda" in report["payload"]["group_citation"]
        assert "pi7s4-v4-kerH" in [c["id"] for c in report["payload"]["certificates"]]

    async def test_filtration_single_k(self, out: Path) -> None:
        """Test that --k filters the certificates."""
        assert await async_main(["filtration", "--m", "7", "--n", "4", "--k", "4", "--out", str(out)]) == EXIT_OK
        assert {c["k"] for c in read_report(out, "filtration")["payload"]["certificates"]} == {4}

    async def test_ledger_miss(self, out: Path) -> None:
        """Test that an unencoded group exits with 2."""
        assert await async_main(["filtration", "--m", "100", "--n", "50", "--out", str(out)]) == EXIT_LEDGER_MISS
        assert not (out / "filtration.json").exists()

    @pytest.mark.parametrize(("N", "expected"), [(3, [4, 12, 20, 28, 36]), (4, [13, 21, 29, 37, 45])])
    async def test_targets(self, out: Path, N: int, expected: list[int]) -> None:
        """Test the target dimension lists."""
        assert await async_main(["targets", "--N", str(N), "--out", str(out)]) == EXIT_OK
        assert read_report(out, "targets")["payload"]["targets"] == expected

    async def test_targets_n2(self, out: Path) -> None:
        """Test that N=2 answers with the rank fact."""
        assert await async_main(["targets", "--N", "2", "--out", str(out)]) == EXIT_OK
        assert read_report(out, "targets")["payload"]["targets"] == []

    async def test_targets_n1(self, out: Path) -> None:
        """Test that N=1 is a usage error."""
        assert await async_main(["targets", "--N", "1", "--out", str(out)]) == EXIT_USAGE

    async def test_targets_csv(self, out: Path) -> None:
        """Test that CSV output writes the table next to the JSON."""
        assert await async_main(["targets", "--N", "3", "--count", "3", "--format", "csv", "--out", str(out)]) == 0
        frame = pd.read_csv(out / "targets.csv")
        assert frame["M"].tolist() == [4, 12, 20]


class TestNumericCommands:
    """Test dilation, hopf and sweep."""

    async def test_dilation(self, out: Path) -> None:
        """Test the 2-dilation of the Hopf map."""
        argv = ["dilation", "--map", "hopf", "--k", "2", "--budget", "256", "--out", str(out)]
        assert await async_main(argv) == EXIT_OK
        report = read_report(out, "dilation")
        assert report["payload"]["report"]["estimate"] == pytest.approx(4.0, rel=1e-2)
        assert report["config"]["run"]["budget"] == 256

    async def test_bad_map_spec(self, out: Path) -> None:
        """Test that an unparseable map is a usage error."""
        assert await async_main(["dilation", "--map", "frob", "--out", str(out)]) == EXIT_USAGE

    async def test_hopf_constant(self, out: Path, mocker: MockerFixture) -> None:
        """Test that the constant map has H = 0 and passes."""
        mocker.patch("kdilation.core.calibrate_fitted_c", return_value=1.25 / 16)
        assert await async_main(["hopf", "--map", "constant", "--budget", "64", "--out", str(out)]) == EXIT_OK
        audit = read_report(out, "hopf")["payload"]["audit"]
        assert audit["hopf_invariant"] == 0
        assert audit["pass"] is True

    async def test_hopf_wrong_spaces(self, out: Path, mocker: MockerFixture) -> None:
        """Test that a map S^3 -> S^3 is a usage error."""
        mocker.patch("kdilation.core.calibrate_fitted_c", return_value=1.25 / 16)
        assert await async_main(["hopf", "--map", "wrap(2)", "--budget", "64", "--out", str(out)]) == EXIT_USAGE

    async def test_acceptance_miss(self, out: Path, mocker: MockerFixture) -> None:
        """Test that a failed |H| ≤ C·D² check exits with 4 and still writes the report."""
        mocker.patch("kdilation.core.calibrate_fitted_c", return_value=1e-6)
        assert await async_main(["hopf", "--map", "hopf", "--budget", "64", "--out", str(out)]) == EXIT_ACCEPTANCE
        assert read_report(out, "hopf")["passed"] is False

    async def test_sweep(self, out: Path, mocker: MockerFixture) -> None:
        """Test the sweep table and that a re-run writes identical bytes."""
        mocker.patch("kdilation.core.sweep_point", side_effect=fake_sweep_point)
        argv = ["sweep", "--k", "3", "--budget", "64", "--out", str(out)]
        assert await async_main(argv) == EXIT_OK
        first = (out / "sweep.json").read_bytes(), (out / "sweep.csv").read_bytes()
        frame = pd.read_csv(out / "sweep.csv")
        assert list(frame.columns) == ["epsilon", "estimate", "budget", "ascent_steps", "predicted_bound"]
        assert frame["epsilon"].tolist() == [0.5, 0.25, 0.125, 0.0625]
        assert read_report(out, "sweep")["payload"]["slope"] == pytest.approx(1.0)

        assert await async_main(argv) == EXIT_OK
        assert ((out / "sweep.json").read_bytes(), (out / "sweep.csv").read_bytes()) == first

    async def test_sweep_slope_miss(self, out: Path, mocker: MockerFixture) -> None:
        """Test that a slope far from the prediction exits with 4."""
        mocker.patch("kdilation.core.sweep_point", side_effect=fake_sweep_point)
        assert await async_main(["sweep", "--k", "2", "--budget", "64", "--out", str(out)]) == EXIT_ACCEPTANCE

    async def test_sweep_unstubbed_is_reproducible(self, out: Path) -> None:
        """Test a real k=4 sweep: vanishing, and byte-identical on a re-run."""
        argv = ["sweep", "--k", "4", "--budget", "64", "--out", str(out)]
        assert await async_main(argv) == EXIT_OK
        first = (out / "sweep.json").read_bytes(), (out / "sweep.csv").read_bytes()
        payload = read_report(out, "sweep")["payload"]
        assert payload["vanishing"] is True
        assert pd.read_csv(out / "sweep.csv")["estimate"].tolist() == [0.0, 0.0, 0.0, 0.0]

        assert await async_main(argv) == EXIT_OK
        assert ((out / "sweep.json").read_bytes(), (out / "sweep.csv").read_bytes()) == first

    async def test_audit_unstubbed(self, out: Path) -> None:
        """Test the calibrated audit over hopf ∘ wrap(d), d = 1, 2, 3."""
        assert await async_main(["audit", "--budget", "128", "--out", str(out)]) == EXIT_OK
        payload = read_report(out, "audit")["payload"]
        assert [a["hopf_invariant"] for a in payload["audits"]] == [1, 2, 3]
        assert payload["passed"] is True

    async def test_hopf_unstubbed(self, out: Path) -> None:
        """Test the Hopf map against its own calibrated constant."""
        assert await async_main(["hopf", "--map", "hopf", "--budget", "128", "--out", str(out)]) == EXIT_OK
        assert read_report(out, "hopf")["payload"]["audit"]["hopf_invariant"] == 1

    async def test_more_suspensions_than_thin_axes(self, out: Path) -> None:
        """Test that p > m is refused before any work."""
        argv = ["construct", "--construction", "hopf", "--p", "4", "--out", str(out)]
        assert await async_main(argv) == EXIT_USAGE

    async def test_empty_grid(self, out: Path) -> None:
        """Test that an empty ε grid is a usage error."""
        assert await async_main(["sweep", "--epsilon-grid", "", "--out", str(out)]) == EXIT_USAGE

    async def test_narrow_grid(self, out: Path) -> None:
        """Test that a grid spanning less than a factor of 8 is a usage error."""
        assert await async_main(["sweep", "--epsilon-grid", "1/2,1/4", "--out", str(out)]) == EXIT_USAGE


class TestConfiguration:
    """Test config layering."""

    async def test_config_file_and_flags(self, out: Path, tmp_path: Path) -> None:
        """Test that flags override the --config file, which overrides defaults."""
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"budget": 32, "seed": 5, "k": 1}))
        argv = ["dilation", "--map", "hopf", "--seed", "9", "--config", str(config), "--out", str(out)]
        assert await async_main(argv) == EXIT_OK
        run = read_report(out, "dilation")["config"]["run"]
        assert (run["budget"], run["seed"], run["k"]) == (32, 9, 1)

    async def test_bad_config_file(self, out: Path, tmp_path: Path) -> None:
        """Test that a malformed config file is a usage error."""
        config = tmp_path / "run.json"
        config.write_text("{not json")
        assert await async_main(["audit", "--config", str(config), "--out", str(out)]) == EXIT_USAGE

    async def test_environment(self, out: Path, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test that KDILATION_DILATION__BUDGET sets the default budget."""
        monkeypatch.setenv("KDILATION_DILATION__BUDGET", "48")
        assert await async_main(["dilation", "--map", "hopf", "--out", str(out)]) == EXIT_OK
        assert read_report(out, "dilation")["config"]["run"]["budget"] == 48
