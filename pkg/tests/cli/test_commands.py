from pathlib import Path
import json

import pandas as pd
import pytest

from interleave.cli import ExperimentConfig, cmd_run, cmd_sweep, cmd_compare, cmd_gradcheck, cmd_discretize
from interleave.supernet import Architecture


def _with(cfg: ExperimentConfig, **kwargs) -> ExperimentConfig:
    return ExperimentConfig.from_dict({**cfg.to_dict(), **kwargs})


def _files(path: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


class TestRun:
    @pytest.mark.fast()
    def test_outputs(self, experiment: ExperimentConfig):
        summary = cmd_run(experiment)
        out = experiment.output_dir

        for seed in (0, 1):
            records = [json.loads(line) for line in (out / f"metrics_il_seed{seed}.jsonl").read_text().splitlines()]
            assert len(records) == 2 * 2 * 2
            report = json.loads((out / f"report_il_seed{seed}.json").read_text())
            assert report["method"] == "il"
            assert len(report["iterations"]) == 2
            arch = Architecture.from_yaml(out / f"architecture_il_seed{seed}.yaml")
            assert len(arch.retained) == 3
        assert list(summary["seed"]) == ["0", "1", "mean", "std"]
        assert {"final_val_loss", "test_error_1", "test_error_2"} <= set(summary.columns)
        assert (out / "summary_il.tsv").is_file()

    @pytest.mark.fast()
    def test_byte_identical(self, experiment: ExperimentConfig, tmp_path: Path):
        cmd_run(_with(experiment, output_dir=str(tmp_path / "a")))
        cmd_run(_with(experiment, output_dir=str(tmp_path / "b")))

        assert _files(tmp_path / "a") == _files(tmp_path / "b")

    @pytest.mark.fast()
    def test_workers_match_serial(self, experiment: ExperimentConfig, tmp_path: Path):
        seeds = [0, 1, 2, 3]
        cmd_run(_with(experiment, output_dir=str(tmp_path / "serial"), seeds=seeds))
        cmd_run(_with(experiment, output_dir=str(tmp_path / "pool"), seeds=seeds, threads=4))

        assert _files(tmp_path / "serial") == _files(tmp_path / "pool")

    @pytest.mark.fast()
    def test_alpha_plots(self, experiment: ExperimentConfig):
        cmd_run(_with(experiment, plot=True))

        for seed in (0, 1):
            assert (experiment.output_dir / f"alpha_il_seed{seed}.png").stat().st_size > 0

    @pytest.mark.fast()
    def test_no_alpha_plots_by_default(self, experiment: ExperimentConfig):
        cmd_run(experiment)

        assert not list(experiment.output_dir.glob("alpha_*.png"))

    @pytest.mark.fast()
    def test_zero_iterations(self, experiment: ExperimentConfig):
        engine = {**experiment.engine.model_dump(mode="json"), "outer_iters": 0}
        summary = cmd_run(_with(experiment, engine=engine))

        assert list(summary.columns) == ["seed", "initial_val_loss", "initial_val_loss_1", "initial_val_loss_2"]
        assert (experiment.output_dir / "metrics_il_seed0.jsonl").read_text() == ""

    @pytest.mark.fast()
    def test_single_seed_std(self, experiment: ExperimentConfig):
        summary = cmd_run(_with(experiment, seeds=[3]))

        assert summary.iloc[-1]["final_val_loss"] == 0.0


class TestSweep:
    @pytest.mark.fast()
    def test_lambda(self, experiment: ExperimentConfig):
        table = cmd_sweep(experiment, "lambda")
        out = experiment.output_dir

        assert list(table.columns) == ["value", "seed", "val_loss", "test_error"]
        assert len(table) == 4
        summary = pd.read_csv(out / "sweep_lambda_summary.tsv", sep="\t")
        assert list(summary["value"]) == [0.0, 1.0]
        assert (out / "sweep_lambda.gp").read_text().startswith("set terminal svg")
        assert not (out / "sweep_lambda.png").exists()

    @pytest.mark.fast()
    def test_order(self, experiment: ExperimentConfig):
        table = cmd_sweep(experiment, "order")

        assert list(dict.fromkeys(table["value"])) == ["1-2", "2-1"]

    @pytest.mark.fast()
    def test_rounds_with_plot(self, experiment: ExperimentConfig):
        sweep = {**experiment.sweep.model_dump(mode="json"), "rounds_values": [1], "plot": True}
        cmd_sweep(_with(experiment, sweep=sweep), "rounds")

        assert (experiment.output_dir / "sweep_rounds.png").is_file()

    @pytest.mark.fast()
    def test_invalid_axis(self, experiment: ExperimentConfig):
        with pytest.raises(ValueError, match="Invalid option"):
            cmd_sweep(experiment, "eta")


class TestGradcheck:
    @pytest.mark.fast()
    def test_passes(self, experiment: ExperimentConfig):
        assert cmd_gradcheck(experiment)

        text = (experiment.output_dir / "gradcheck_seed0.yaml").read_text()
        assert text.count("---\n") == 2
        assert "kind: hypergradient" in text

    @pytest.mark.fast()
    def test_fails(self, experiment: ExperimentConfig):
        gradcheck = {**experiment.gradcheck.model_dump(mode="json"), "tol_arch": 1e-300, "tol_weights": 1e-300}

        assert not cmd_gradcheck(_with(experiment, gradcheck=gradcheck))


class TestDiscretize:
    @pytest.mark.fast()
    def test_from_report(self, experiment: ExperimentConfig):
        cmd_run(experiment)
        out = experiment.output_dir
        target = cmd_discretize(out / "report_il_seed0.json")

        assert target == out / "report_il_seed0_discrete.yaml"
        arch = Architecture.from_yaml(target)
        assert arch.cell.is_discrete
        assert arch.retained == Architecture.from_yaml(out / "architecture_il_seed0.yaml").retained

    @pytest.mark.fast()
    def test_idempotent(self, experiment: ExperimentConfig, tmp_path: Path):
        cmd_run(experiment)
        first = cmd_discretize(experiment.output_dir / "architecture_il_seed1.yaml", out=tmp_path / "disc")
        content = first.read_bytes()
        second = cmd_discretize(first)

        assert second == first
        assert second.read_bytes() == content

    @pytest.mark.fast()
    def test_invalid_report(self, tmp_path: Path):
        path = tmp_path / "report.json"
        path.write_text(json.dumps({"alpha": {}}))

        with pytest.raises(ValueError, match="Unable to read a run report"):
            cmd_discretize(path)


class TestCompare:
    @pytest.mark.fast()
    def test_outputs(self, experiment: ExperimentConfig):
        effects = cmd_compare(experiment)
        out = experiment.output_dir

        assert list(effects["baseline"]) == ["blocked", "mtl"]
        assert len(pd.read_csv(out / "compare.tsv", sep="\t")) == 6
        assert (out / "compare_summary.tsv").is_file()
        assert (out / "compare_effects.tsv").is_file()
