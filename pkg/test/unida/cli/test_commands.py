import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from pytest import raises

from test.unida.base import BaseTest
from unida.cli.commands import (
    ANALYSIS_PATH,
    ENSEMBLE_PATH,
    OBS_PATH,
    SAMPLES_PATH,
    SCHEDULE_PATH,
    SCORES_PATH,
    TRAIN_PATH,
    TRUTH_PATH,
    RunContext,
    run_command,
)
from unida.common.errors import CapacityError, ConfigError
from unida.core.container import read_sidecar, read_tensor, write_tensor
from unida.denoise.affine import MANIFEST_NAME as AFFINE_MANIFEST_NAME
from unida.observe.observations import ObservationSet
from unida.project.config import ExperimentConfig
from unida.project.manifest import MANIFEST_NAME, RunManifest

FAST_GAUSSIAN = {"kind": "gaussian", "causal": True, "T_s": 10}


class CommandTests(BaseTest):
    def context(self, content: dict[str, Any]) -> RunContext:
        content = {"output_dir": str(self.tmp_path() / "out"), **content}
        return RunContext(config=ExperimentConfig.model_validate(content))

    def run_all(self, ctx: RunContext, *names: str):
        return [run_command(name, ctx) for name in names]

    def test__kalman_pipeline__writes_artifacts_and_manifest(self):
        ctx = self.context({"preset": "ssm-kf", "seed": 3})
        self.run_all(ctx, "generate", "observe", "assimilate", "evaluate")
        truth = read_tensor(ctx.path(TRUTH_PATH))
        self.assertEqual(truth.shape, (10, 1, 1, 2))
        obs = ObservationSet.load(ctx.path(OBS_PATH))
        self.assertEqual(obs.frame_indices, tuple(range(10)))
        analysis = read_tensor(ctx.path(ANALYSIS_PATH))
        self.assertEqual(analysis.shape, truth.shape)
        self.assertEqual(read_sidecar(ctx.path(ANALYSIS_PATH))["method"], "kf")
        summary = json.loads((ctx.root / "metrics" / "summary.json").read_text())
        self.assertLess(summary["nrmse"], 1.0)

        content = json.loads((ctx.root / MANIFEST_NAME).read_text())
        self.assertEqual(set(content["runs"]), {"generate", "observe", "assimilate", "evaluate"})
        observe = RunManifest.read(ctx.root, "observe")
        self.assertIn(TRUTH_PATH, observe.inputs)
        self.assertIn(OBS_PATH, observe.outputs)
        self.assertEqual(observe.config_hash, ctx.config.config_hash())

    def test__generate__is_reproducible_per_seed(self):
        a = self.context({"preset": "ssm-kf", "seed": 5})
        b = self.context({"preset": "ssm-kf", "seed": 5})
        c = self.context({"preset": "ssm-kf", "seed": 6})
        for ctx in (a, b, c):
            run_command("generate", ctx)
        np.testing.assert_array_equal(
            read_tensor(a.path(TRUTH_PATH)), read_tensor(b.path(TRUTH_PATH))
        )
        self.assertFalse(
            np.array_equal(read_tensor(a.path(TRUTH_PATH)), read_tensor(c.path(TRUTH_PATH)))
        )

    def test__smoother_improves_on_filter(self):
        errors = {}
        for preset in ("ssm-kf", "ssm-rts"):
            ctx = self.context({"preset": preset, "seed": 1, "K": 30})
            self.run_all(ctx, "generate", "observe", "assimilate", "evaluate")
            summary = json.loads((ctx.root / "metrics" / "summary.json").read_text())
            errors[preset] = summary["nrmse"]
        self.assertLessEqual(errors["ssm-rts"], errors["ssm-kf"] + 0.02)

    def test__forcingdas_gaussian__assimilate_and_forecast(self):
        ctx = self.context(
            {
                "preset": "ssm-forcingdas-ar",
                "method": {"kind": "forcingdas", "n_samples": 2, "denoiser": FAST_GAUSSIAN},
                "forecast": {"context": 2, "horizon": 3, "n_members": 4},
            }
        )
        self.run_all(ctx, "generate", "observe", "train", "assimilate", "forecast", "evaluate")
        samples = read_tensor(ctx.path(SAMPLES_PATH))
        self.assertEqual(samples.shape, (2, 10, 1, 1, 2))
        np.testing.assert_allclose(read_tensor(ctx.path(ANALYSIS_PATH)), samples.mean(axis=0))
        diagnostics = read_sidecar(ctx.path(ANALYSIS_PATH))["diagnostics"]
        self.assertEqual(diagnostics["n_samples"], 2)

        ensemble = read_tensor(ctx.path(ENSEMBLE_PATH))
        self.assertEqual(ensemble.shape, (4, 5, 1, 1, 2))
        truth = read_tensor(ctx.path(TRUTH_PATH))
        np.testing.assert_array_equal(ensemble[:, :2], np.broadcast_to(truth[:2], (4, 2, 1, 1, 2)))
        scores = pd.read_csv(ctx.path(SCORES_PATH))
        self.assertEqual(list(scores["lead"]), [1, 2, 3])
        metrics = pd.read_csv(ctx.root / "metrics" / "metrics.csv")
        self.assertEqual(set(metrics["trajectory_id"]), {"analysis", "forecast"})
        self.assertIn("crps", set(metrics["metric"]))

    def test__forcingdas_sliding_window_with_context(self):
        ctx = self.context(
            {
                "preset": "ssm-forcingdas-ar",
                "K": 8,
                "context": 2,
                "method": {
                    "kind": "forcingdas",
                    "denoiser": {**FAST_GAUSSIAN, "window": 4},
                },
            }
        )
        self.run_all(ctx, "generate", "observe", "assimilate")
        truth = read_tensor(ctx.path(TRUTH_PATH))
        analysis = read_tensor(ctx.path(ANALYSIS_PATH))
        self.assertEqual(analysis.shape, (8, 1, 1, 2))
        np.testing.assert_allclose(analysis[:2], truth[:2])

    def test__train_affine_then_assimilate(self):
        ctx = self.context(
            {
                "dataset": {"kind": "ssm", "n_train": 6},
                "sigma_y": 0.1,
                "K": 4,
                "method": {
                    "kind": "forcingdas",
                    "regime": "pyr",
                    "zeta": 0.05,
                    "denoiser": {
                        "kind": "affine",
                        "T_s": 8,
                        "training": {"steps": 30, "batch_size": 8},
                    },
                },
            }
        )
        self.run_all(ctx, "generate", "observe", "train", "assimilate")
        self.assertEqual(read_tensor(ctx.path(TRAIN_PATH)).shape, (6, 4, 1, 1, 2))
        self.assertTrue((ctx.root / "denoiser" / AFFINE_MANIFEST_NAME).exists())
        train = RunManifest.read(ctx.root, "train")
        self.assertIn(f"denoiser/{AFFINE_MANIFEST_NAME}", train.outputs)
        assimilate = RunManifest.read(ctx.root, "assimilate")
        self.assertIn(f"denoiser/{AFFINE_MANIFEST_NAME}", assimilate.inputs)
        self.assertTrue(np.all(np.isfinite(read_tensor(ctx.path(ANALYSIS_PATH)))))

    def test__train__dense_dimension_guard__FAILS(self):
        ctx = self.context(
            {
                "dataset": {"kind": "ns", "n_train": 1, "ns": {"N": 16}},
                "K": 20,
                "method": {"kind": "forcingdas", "denoiser": {"training": {"steps": 0}}},
            }
        )
        (ctx.root / "data").mkdir(parents=True)
        write_tensor(ctx.path(TRAIN_PATH), np.zeros((1, 20, 1, 16, 16)))
        with raises(CapacityError):
            run_command("train", ctx)

    def test__enkf_on_linear_system(self):
        ctx = self.context(
            {
                "preset": "ssm-kf",
                "method": {"kind": "enkf", "n_ensemble": 50, "localization": None},
            }
        )
        self.run_all(ctx, "generate", "observe", "assimilate")
        diagnostics = read_sidecar(ctx.path(ANALYSIS_PATH))["diagnostics"]
        self.assertEqual(len(diagnostics["spread"]), 10)
        self.assertEqual(diagnostics["warnings"], [])

    def test__var4d_on_linear_system(self):
        ctx = self.context({"preset": "ssm-kf", "method": {"kind": "var4d", "window": 5}})
        self.run_all(ctx, "generate", "observe", "assimilate")
        diagnostics = read_sidecar(ctx.path(ANALYSIS_PATH))["diagnostics"]
        self.assertEqual(read_tensor(ctx.path(ANALYSIS_PATH)).shape, (10, 1, 1, 2))
        self.assertIsInstance(diagnostics, dict)

    def test__evaluate__perfect_prediction_scores_perfectly(self):
        ctx = self.context(
            {"preset": "ssm-kf", "dataset": {"kind": "ssm", "csi_thresholds": [-0.5, 0.0, 0.5]}}
        )
        self.run_all(ctx, "generate", "observe", "assimilate")
        write_tensor(ctx.path(ANALYSIS_PATH), read_tensor(ctx.path(TRUTH_PATH)))
        run_command("evaluate", ctx)
        summary = json.loads((ctx.root / "metrics" / "summary.json").read_text())
        self.assertEqual(summary["nrmse"], 0.0)
        self.assertEqual(summary["bias"], 0.0)
        self.assertAlmostEqual(summary["acc"], 1.0, places=12)
        csi_keys = sorted(key for key in summary if key.startswith("csi/"))
        self.assertEqual(len(csi_keys), 3)
        for key in csi_keys:
            self.assertEqual(summary[key], 1.0)

    def test__evaluate__default_thresholds_and_truth_climatology(self):
        ctx = self.context({"preset": "ssm-kf"})
        self.run_all(ctx, "generate", "observe", "assimilate", "evaluate")
        summary = json.loads((ctx.root / "metrics" / "summary.json").read_text())
        self.assertIn("acc", summary)
        self.assertIn("bias", summary)
        self.assertEqual(len([key for key in summary if key.startswith("csi/")]), 6)

    def test__schedule_dump(self):
        ctx = self.context(
            {
                "preset": "ssm-forcingdas-ar",
                "K": 3,
                "method": {"kind": "forcingdas", "regime": "fs", "denoiser": FAST_GAUSSIAN},
            }
        )
        run_command("schedule-dump", ctx)
        lines = Path(ctx.path(SCHEDULE_PATH)).read_text().strip().splitlines()
        self.assertEqual(len(lines), 3)
        self.assertEqual(lines[0].split(",")[0], "10")
        self.assertEqual(lines[0].split(",")[-1], "0")

    def test__missing_inputs__FAILS(self):
        ctx = self.context({"preset": "ssm-kf"})
        for name in ("observe", "assimilate", "evaluate"):
            with raises(ConfigError):
                run_command(name, ctx)
        self.assertFalse((ctx.root / MANIFEST_NAME).exists())

    def test__method_specific_commands__FAILS(self):
        ctx = self.context({"preset": "ssm-kf"})
        for name in ("train", "forecast", "schedule-dump"):
            with raises(ConfigError) as e:
                run_command(name, ctx)
            self.assertEqual(e.value.key, "method.kind")
        with raises(ConfigError):
            run_command("no-such-command", ctx)

    def test__forecast_without_section__FAILS(self):
        ctx = self.context({"preset": "ssm-forcingdas-ar"})
        with raises(ConfigError) as e:
            run_command("forecast", ctx)
        self.assertEqual(e.value.key, "forecast")

    def test__affine_denoiser_must_be_trained__FAILS(self):
        ctx = self.context(
            {"method": {"kind": "forcingdas", "denoiser": {"kind": "affine", "T_s": 4}}}
        )
        self.run_all(ctx, "generate", "observe")
        with raises(ConfigError) as e:
            run_command("assimilate", ctx)
        self.assertEqual(e.value.key, "method.denoiser.path")
