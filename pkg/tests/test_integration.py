"""
Integration tests for shallowmimic.

These tests run every experiment command on a tiny synthetic benchmark:
- Teacher training, distillation, evaluation and bottleneck absorption
- Parameter and teacher-quality sweeps
- Byte-identical reruns of sweeps and of CLI commands
- The CLI with an INI configuration file
- Slow directional checks of mimic learning on a larger benchmark
"""

import json

import numpy as np
import pytest

from shallowmimic.cli import main
from shallowmimic.data.csv_io import save_csv
from shallowmimic.data.synthetic import make_synthetic
from shallowmimic.exceptions import ConfigurationError
from shallowmimic.harness import (
    DIRECT,
    MIMIC,
    ExperimentConfig,
    Workspace,
    cmd_absorb,
    cmd_distill,
    cmd_eval,
    cmd_sweep_params,
    cmd_sweep_teacher,
    cmd_train_baseline,
    cmd_train_teacher,
    dev_loss_minimum,
    read_metrics_csv,
    with_overrides,
)
from shallowmimic.nn import load_model, param_count, predict_logits, shallow_spec
from shallowmimic.utils.constants import ExitCodes

pytestmark = pytest.mark.integration


@pytest.fixture
def tiny_config(tmp_path):
    """A configuration small enough to train every command in seconds."""
    return ExperimentConfig(
        out_dir=str(tmp_path / "runs"),
        synth_classes=3,
        synth_dims=8,
        synth_clusters=2,
        synth_separation=4.0,
        synth_train=60,
        synth_unlabeled=40,
        synth_dev=30,
        synth_test=30,
        teacher_hidden=(8,),
        student_hidden=6,
        dropout=0.0,
        teacher_dropout=0.0,
        learning_rate=0.01,
        batch_size=16,
        max_epochs=2,
        widths=(4, 8),
        ladder_epochs=(1,),
        ladder_ensembles=(1, 2),
    )


class TestEndToEndDistillation:
    """Integration tests for the teacher -> student -> eval workflow."""

    def test_teacher_distill_eval_absorb(self, tmp_path, tiny_config):
        """Test the complete workflow from teacher training to an absorbed student."""
        # Arrange: Preprocessing and a bottlenecked student
        config = with_overrides(tiny_config, preprocess="standardize", bottleneck=3)
        workspace = Workspace.create(tmp_path / "runs")

        # Act: Train a teacher, then distill from its saved file
        teachers = cmd_train_teacher(config, workspace)
        distill_config = with_overrides(
            config, teacher_models=(str(teachers.models[0]),), save_transfer=True
        )
        students = cmd_distill(distill_config, workspace)

        # Assert: Files and summaries
        assert teachers.models[0].name == "teacher_s0.smim"
        assert students.models[0].name == "mimic_h6_s0.smim"
        assert workspace.stats_path.exists(), "Preprocessing sidecar should be saved"
        assert (workspace.transfer_dir / "header.json").exists()
        summary = json.loads(workspace.table_path("distill", ".json").read_text())
        assert summary["transfer_rows"] == 100
        assert summary["normalized"] is True
        assert summary["data"]["benchmark"]["classes"] == 3
        assert summary["data"]["preprocess"] == [
            {"kind": "per_dim_standardize", "dims": 8, "epsilon": 1e-8}
        ]
        records = read_metrics_csv(workspace.metrics_path("mimic_h6_s0"))
        assert [record.epoch for record in records] == [1, 2]
        assert all(record.elapsed_seconds == 0.0 for record in records)

        # Act: Evaluate the raw test split through the saved pipeline
        splits = make_synthetic(config.synthetic_spec(), config.synth_seed)
        test_csv = save_csv(splits.test, tmp_path / "test.csv")
        report = cmd_eval(
            with_overrides(
                config,
                model=str(students.models[0]),
                dataset=str(test_csv),
                stats=str(workspace.stats_path),
            )
        )

        # Assert: Error rate is a proper fraction of the test rows
        assert report.rows == 30
        assert 0.0 <= report.error_rate <= 1.0

        # Act: Absorb the bottleneck
        absorbed = cmd_absorb(with_overrides(config, model=str(students.models[0])))

        # Assert: 8*3 + (3*6+6) + (6*3+3) -> (8*6+6) + (6*3+3)
        assert (absorbed.before, absorbed.after) == (69, 75)
        original = load_model(students.models[0])
        merged = load_model(absorbed.output)
        features = np.random.default_rng(0).standard_normal((5, 8))
        np.testing.assert_allclose(
            predict_logits(merged, features), predict_logits(original, features), atol=1e-10
        )

    def test_bootstrap_ensemble(self, tmp_path, tiny_config):
        """Test that several bootstrap teachers report an ensemble error."""
        config = with_overrides(tiny_config, seeds=(0, 1), bootstrap=True)
        workspace = Workspace.create(tmp_path / "runs")

        summary = cmd_train_teacher(config, workspace)

        assert len(summary.models) == 2
        assert summary.ensemble_dev_error is not None
        assert 0.0 <= summary.ensemble_dev_error <= 1.0

    def test_baseline(self, tmp_path, tiny_config):
        """Test direct training of the student architecture."""
        workspace = Workspace.create(tmp_path / "runs")
        summary = cmd_train_baseline(tiny_config, workspace)
        assert summary.models[0].name == "baseline_h6_s0.smim"
        assert workspace.table_path("train_baseline", ".json").exists()


class TestSweeps:
    """Integration tests for the parameter and teacher sweeps."""

    def test_sweep_params_rows(self, tmp_path, tiny_config):
        """Test one direct and one mimic row per width and seed."""
        config = with_overrides(tiny_config, seeds=(0, 1))
        workspace = Workspace.create(tmp_path / "runs")

        result = cmd_sweep_params(config, workspace)

        assert len(result.rows) == 2 * 2 * 2
        assert [row.regime for row in result.rows[:2]] == ["direct", "mimic"]
        assert all(row.teacher_error is None for row in result.by_regime("direct"))
        assert all(row.teacher_error is not None for row in result.by_regime("mimic"))
        lines = workspace.table_path("sweep_params").read_text().splitlines()
        assert len(lines) == 1 + 8

    def test_sweep_params_reproducible(self, tmp_path, tiny_config):
        """Test that reruns with the same configuration write identical tables."""
        # Arrange
        first = Workspace.create(tmp_path / "a")
        second = Workspace.create(tmp_path / "b")

        # Act
        cmd_sweep_params(tiny_config, first)
        cmd_sweep_params(tiny_config, second)

        # Assert
        assert (
            first.table_path("sweep_params").read_bytes()
            == second.table_path("sweep_params").read_bytes()
        ), "Sweep tables should be byte-identical across reruns"
        assert (
            first.model_path("mimic_h8_s0").read_bytes()
            == second.model_path("mimic_h8_s0").read_bytes()
        ), "Models should be byte-identical across reruns"

    def test_sweep_teacher(self, tmp_path, tiny_config):
        """Test that every ladder rung is distilled into every width."""
        workspace = Workspace.create(tmp_path / "runs")

        result = cmd_sweep_teacher(tiny_config, workspace)

        # one checkpoint rung plus ensembles of 1 and 2
        assert len(result.rows) == 3 * 2
        assert result.rows[0].model_id == "mimic_epoch1_h4_s0"
        assert result.rows[2].model_id == "mimic_ensemble2_h4_s0"
        trend = json.loads(workspace.table_path("sweep_teacher_trend", ".json").read_text())
        assert trend["rungs"] == ["epoch1", "ensemble1", "ensemble2"]
        assert set(trend["spearman"]) == {"h4_s0", "h8_s0"}

    def test_sweep_teacher_late_checkpoint(self, tmp_path, tiny_config):
        """Test that a checkpoint after the last epoch is rejected."""
        config = with_overrides(tiny_config, ladder_epochs=(5,))
        with pytest.raises(ConfigurationError):
            cmd_sweep_teacher(config, Workspace.create(tmp_path / "runs"))


class TestCliWorkflow:
    """Integration tests through the shallowmimic entry point."""

    def test_config_file_run(self, tmp_path):
        """Test a run configured by an INI file plus overrides."""
        # Arrange: Create the configuration file
        ini = tmp_path / "exp.ini"
        ini.write_text(
            "[data]\nsynth_classes = 3\nsynth_dims = 8\nsynth_clusters = 2\n"
            "synth_train = 60\nsynth_unlabeled = 40\nsynth_dev = 30\nsynth_test = 30\n\n"
            "[network]\nstudent_hidden = 5\ndropout = 0.0\n\n"
            "[train]\nmax_epochs = 1\nbatch_size = 16\n"
        )
        out = tmp_path / "runs"

        # Act
        code = main(["train-baseline", "-q", "-c", str(ini), "-o", str(out), "--seeds", "3"])

        # Assert
        assert code == ExitCodes.SUCCESS
        assert (out / "models" / "baseline_h5_s3.smim").exists()
        assert (out / "metrics" / "baseline_h5_s3.csv").exists()
        assert json.loads((out / "train_baseline.json").read_text())["models"] == [
            "baseline_h5_s3.smim"
        ]
        resolved = json.loads((out / "train-baseline_config.json").read_text())
        assert resolved["seeds"] == [3]
        assert resolved["student_hidden"] == 5

    def test_cli_rerun_is_byte_identical(self, tmp_path):
        """Test that rerunning the training commands reproduces every output file."""
        # Arrange
        ini = tmp_path / "exp.ini"
        ini.write_text(
            "[data]\nsynth_classes = 3\nsynth_dims = 8\nsynth_clusters = 2\n"
            "synth_train = 60\nsynth_unlabeled = 40\nsynth_dev = 30\nsynth_test = 30\n"
            "preprocess = standardize\n\n"
            "[network]\nteacher_hidden = 8,8\nstudent_hidden = 5\nbottleneck = 2\n\n"
            "[train]\nmax_epochs = 2\nbatch_size = 16\n"
        )
        runs = [tmp_path / "first", tmp_path / "second"]

        # Act
        for out in runs:
            common = ["-q", "-c", str(ini), "-o", str(out), "--seeds", "0,1"]
            assert main(["train-teacher", *common]) == ExitCodes.SUCCESS
            assert main(["train-baseline", *common]) == ExitCodes.SUCCESS
            teacher = str(out / "models" / "teacher_s0.smim")
            assert main(["distill", *common, "--teacher-models", teacher]) == ExitCodes.SUCCESS

        # Assert: resolved configurations name their own out_dir and are skipped
        first, second = (
            {
                path.relative_to(out): path.read_bytes()
                for path in sorted(out.rglob("*"))
                if path.is_file() and not path.name.endswith("_config.json")
            }
            for out in runs
        )
        assert len(first) > 10
        assert first.keys() == second.keys()
        for name, content in first.items():
            assert content == second[name], f"{name} differs between reruns"


def _median(values):
    return float(np.median(values))


def _first_epoch_below(records, threshold):
    """First epoch whose training loss is at or below ``threshold``."""
    for record in records:
        if record.train_loss <= threshold:
            return record.epoch
    return float("inf")


@pytest.fixture
def benchmark_config(tmp_path):
    """A five-class benchmark large enough for directional comparisons."""
    return ExperimentConfig(
        out_dir=str(tmp_path / "runs"),
        seeds=(0, 1, 2, 3, 4),
        synth_classes=5,
        synth_dims=16,
        synth_clusters=3,
        synth_separation=3.0,
        synth_train=300,
        synth_unlabeled=1500,
        synth_dev=300,
        synth_test=300,
        teacher_hidden=(64, 64, 64),
        teacher_dropout=0.0,
        student_hidden=32,
        dropout=0.0,
        learning_rate=0.01,
        momentum=0.9,
        batch_size=32,
        max_epochs=30,
        teacher_epochs=20,
        widths=(32,),
    )


def _train_teacher(config, workspace):
    """Train one teacher on seed 0 and return its model path."""
    summary = cmd_train_teacher(with_overrides(config, seeds=(0,)), workspace)
    return str(summary.models[0])


@pytest.mark.slow
class TestDirectionalChecks:
    """Longer runs checking that training and mimicry behave as expected."""

    def test_mimic_beats_chance(self, tmp_path, tiny_config):
        """Test that teachers and mimic students both learn the benchmark."""
        # Arrange
        config = with_overrides(
            tiny_config, max_epochs=40, synth_train=300, synth_unlabeled=600, widths=(16,)
        )
        workspace = Workspace.create(tmp_path / "runs")
        chance = 1.0 - 1.0 / config.synth_classes

        # Act
        result = cmd_sweep_params(config, workspace)

        # Assert
        direct, mimic = result.rows
        assert mimic.teacher_error < chance - 0.2, "Teacher should learn the benchmark"
        assert mimic.dev_error < chance - 0.2, "Mimic student should learn from logits"
        assert direct.dev_error < chance - 0.2, "Direct student should learn from labels"

    def test_mimic_no_worse_than_direct(self, tmp_path, benchmark_config):
        """Test that mimic students match or beat direct students of the same spec."""
        # Arrange: Noisy training labels and a five-member deep teacher ensemble
        config = with_overrides(benchmark_config, synth_label_noise=0.3, ensemble_size=5)
        workspace = Workspace.create(tmp_path / "runs")

        # Act
        result = cmd_sweep_params(config, workspace)

        # Assert: Median dev error over five seeds
        direct = [row.dev_error for row in result.by_regime(DIRECT)]
        mimic = [row.dev_error for row in result.by_regime(MIMIC)]
        assert len(direct) == len(mimic) == 5
        assert _median(mimic) <= _median(direct)

    def test_teacher_quality_trend(self, tmp_path, benchmark_config):
        """Test that better teachers give better students and wider students win."""
        # Arrange: Checkpoints after epochs 1 and 3, then ensembles of 1 and 5
        config = with_overrides(
            benchmark_config, ladder_epochs=(1, 3), ladder_ensembles=(1, 5), widths=(4, 64)
        )
        workspace = Workspace.create(tmp_path / "runs")

        # Act
        result = cmd_sweep_teacher(config, workspace)

        # Assert: Positive median Spearman correlation for the wide student
        trend = json.loads(workspace.table_path("sweep_teacher_trend", ".json").read_text())
        rungs = trend["rungs"]
        assert rungs == ["epoch1", "epoch3", "ensemble1", "ensemble5"]
        wide = [trend["spearman"][f"h64_s{seed}"] for seed in config.seeds]
        defined = [value for value in wide if value is not None]
        assert defined, "Teacher and student accuracy should vary across rungs"
        assert _median(defined) > 0.0

        # Assert: The wide student wins on at least three rungs
        errors = {row.model_id: row.dev_error for row in result.rows}

        def rung_median(rung, width):
            return _median([errors[f"mimic_{rung}_h{width}_s{seed}"] for seed in config.seeds])

        wins = sum(rung_median(rung, 64) <= rung_median(rung, 4) for rung in rungs)
        assert wins >= 3

    def test_bottleneck_converges_as_fast(self, tmp_path, benchmark_config):
        """Test that a linear bottleneck does not slow down mimic training."""
        # Arrange: Matched hidden width, bottleneck as wide as the input
        config = with_overrides(
            benchmark_config, student_hidden=64, learning_rate=0.005, max_epochs=20
        )
        teacher = _train_teacher(config, Workspace.create(tmp_path / "teacher"))
        config = with_overrides(config, teacher_models=(teacher,))

        # Act
        runs = {}
        for bottleneck in (0, 16):
            workspace = Workspace.create(tmp_path / f"k{bottleneck}")
            cmd_distill(with_overrides(config, bottleneck=bottleneck), workspace)
            runs[bottleneck] = [
                read_metrics_csv(workspace.metrics_path(f"mimic_h64_s{seed}"))
                for seed in config.seeds
            ]

        # Assert: Epochs to the loss the plain student reaches halfway through
        plain_epochs, bottleneck_epochs = [], []
        for plain, factored in zip(runs[0], runs[16]):
            threshold = plain[config.max_epochs // 2 - 1].train_loss
            plain_epochs.append(_first_epoch_below(plain, threshold))
            bottleneck_epochs.append(_first_epoch_below(factored, threshold))
        assert _median(bottleneck_epochs) <= _median(plain_epochs)

        # Assert: Memory shrinks only below k = D * H / (D + H) = 12.8
        plain_size = param_count(shallow_spec((16,), 64, 5))
        assert param_count(shallow_spec((16,), 64, 5, bottleneck=12)) < plain_size
        assert param_count(shallow_spec((16,), 64, 5, bottleneck=13)) > plain_size

    def test_logit_regression_ranks_first(self, tmp_path, benchmark_config):
        """Test that L2 logit regression is no worse than KL or L2 on probabilities."""
        # Arrange
        config = with_overrides(benchmark_config, max_epochs=10)
        teacher = _train_teacher(config, Workspace.create(tmp_path / "teacher"))
        config = with_overrides(config, teacher_models=(teacher,))

        # Act
        medians = {}
        for loss in ("l2_logit", "kl", "l2_prob"):
            summary = cmd_distill(
                with_overrides(config, mimic_loss=loss), Workspace.create(tmp_path / loss)
            )
            medians[loss] = _median(summary.test_errors)

        # Assert
        assert medians["l2_logit"] <= medians["kl"]
        assert medians["l2_logit"] <= medians["l2_prob"]

    def test_ensemble_beats_median_member(self, tmp_path, benchmark_config):
        """Test that a bootstrap ensemble is no worse than its median member."""
        gaps = []
        for synth_seed in range(5):
            config = with_overrides(
                benchmark_config,
                synth_seed=synth_seed,
                bootstrap=True,
                teacher_hidden=(32, 32, 32),
                teacher_epochs=10,
            )
            summary = cmd_train_teacher(config, Workspace.create(tmp_path / f"b{synth_seed}"))
            gaps.append(summary.ensemble_dev_error - _median(summary.dev_errors))

        assert _median(gaps) <= 0.0

    def test_self_distillation(self, tmp_path, benchmark_config):
        """Test that a student with the teacher's own spec lands within 2 points of it."""
        # Arrange: Teacher and student are both a single 64-unit ReLU layer
        config = with_overrides(
            benchmark_config,
            seeds=(0,),
            teacher_hidden=(64,),
            student_hidden=64,
            teacher_epochs=30,
            max_epochs=60,
            synth_test=1000,
        )
        workspace = Workspace.create(tmp_path / "runs")
        teacher = _train_teacher(config, workspace)

        # Act
        summary = cmd_distill(with_overrides(config, teacher_models=(teacher,)), workspace)

        # Assert
        report = json.loads(workspace.table_path("distill", ".json").read_text())
        assert abs(summary.test_errors[0] - report["teacher_test_error"]) <= 0.02

    def test_normalization_is_not_crucial(self, tmp_path, benchmark_config):
        """Test that students with and without target normalization perform alike."""
        # Arrange
        teacher = _train_teacher(benchmark_config, Workspace.create(tmp_path / "teacher"))
        config = with_overrides(benchmark_config, teacher_models=(teacher,))
        chance = 1.0 - 1.0 / config.synth_classes

        # Act
        medians = {}
        for normalize in ("true", "false"):
            summary = cmd_distill(
                with_overrides(config, normalize_targets=normalize),
                Workspace.create(tmp_path / normalize),
            )
            medians[normalize] = _median(summary.test_errors)

        # Assert
        assert max(medians.values()) < chance - 0.2
        assert abs(medians["true"] - medians["false"]) <= 0.05

    def test_direct_training_overfits_before_mimic(self, tmp_path, benchmark_config):
        """Test the dev-loss minimum of wide direct and mimic students on noisy labels."""
        # Arrange: Few noisy labels, a wide student and a long budget
        config = with_overrides(
            benchmark_config,
            synth_train=100,
            synth_label_noise=0.3,
            student_hidden=256,
            batch_size=16,
            max_epochs=60,
            teacher_epochs=15,
        )
        workspace = Workspace.create(tmp_path / "runs")
        teacher = _train_teacher(config, workspace)

        # Act
        cmd_train_baseline(config, workspace)
        cmd_distill(with_overrides(config, teacher_models=(teacher,)), workspace)

        # Assert: Direct students pass their dev-loss minimum while train loss still falls
        direct_minima, direct_gaps, still_falling = [], [], []
        mimic_minima, mimic_gaps = [], []
        for seed in config.seeds:
            direct = read_metrics_csv(workspace.metrics_path(f"baseline_h256_s{seed}"))
            epoch, gap = dev_loss_minimum(direct)
            direct_minima.append(epoch)
            direct_gaps.append(gap)
            still_falling.append(direct[-1].train_loss < direct[epoch - 1].train_loss)

            mimic = read_metrics_csv(workspace.metrics_path(f"mimic_h256_s{seed}"))
            epoch, gap = dev_loss_minimum(mimic)
            mimic_minima.append(epoch)
            mimic_gaps.append(gap)

        assert _median(direct_minima) < config.max_epochs
        assert sum(still_falling) >= 3
        # Assert: The mimic minimum comes later or the final gap is smaller
        assert _median(mimic_minima) > _median(direct_minima) or _median(mimic_gaps) < _median(
            direct_gaps
        )
