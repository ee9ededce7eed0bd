"""Acceptance gate: one pass/fail line per criterion.

Each test prints ``ACCEPTANCE <criterion>: PASS|FAIL`` (visible with
``pytest -s`` or on failure). Frozen expectations were first confirmed by
an independent brute-force oracle: a leave-one-subject-out
nearest-centroid classifier over the known latent actions of the
synthetic data, which bounds what any single-sensor model can extract.

Criterion 3 (reproducing published numbers on externally converted
Cooking/OPP/PAMAP recordings) requires data that cannot ship with this
repository; it is therefore a documented skip, not part of CI.
"""
import time

import numpy as np
import pytest

from sensorbridge import (
    ExperimentConfig,
    RepresentationMapper,
    SyntheticSpec,
    WindowSpec,
    micro_f1,
    run_experiment,
    samme_alpha,
    select_sensor_columns,
)
from sensorbridge.classify import softmax_loss_grad
from sensorbridge.evaluate import build_feature_table
from sensorbridge.mapping import logistic_loss_grad
from sensorbridge.representation import kmeans

from conftest import make_table, nearest_centroid_oracle
from test_mapping import finite_difference_check

# Frozen benchmark family: 4 subjects, 2 sensors, 6 latent actions, 4
# activities in two confusable pairs. sensor0 sees the pair-splitting
# actions (2-5) only faintly (observability 0.3); sensor1 sees everything.
ACTIVITIES = (
    ("A", (0, 2, 2, 2) * 2),
    ("B", (0, 3, 3, 3) * 2),
    ("C", (1, 4, 4, 4) * 2),
    ("D", (1, 5, 5, 5) * 2),
)
ACTION_TO_LABEL = {0: "A", 1: "C", 2: "A", 3: "B", 4: "C", 5: "D"}
WINDOW = WindowSpec(length_s=1.0, step_s=1.0)


def benchmark_spec(noise_std, subject_offset_std):
    return SyntheticSpec(
        n_subjects=4, n_sensors=2, n_actions=6,
        activities=ACTIVITIES,
        observability=((1.0, 1.0, 0.3, 0.3, 0.3, 0.3), (1.0,) * 6),
        noise_std=noise_std, samples_per_action=100, seed=11,
        sampling_rate_hz=50.0, channels_per_sensor=5,
        subject_offset_std=subject_offset_std, offset_scale=0.0,
    )


def benchmark_config(spec, variant, seed, train_label_fraction):
    return ExperimentConfig(
        dataset=spec, window=WINDOW, test_sensor="sensor0",
        variant=variant, k_per_sensor=6, seed=seed,
        train_label_fraction=train_label_fraction,
    )


def window_actions(table):
    """True latent action of each window, from the generator's layout.

    Every action occurrence spans exactly 2 s; window starts are
    per-subject, so ``start // 2`` indexes the concatenated sequence.
    """
    seq = [a for _, actions in ACTIVITIES for a in actions]
    return np.array([seq[int(start // 2.0)]
                     for start, _ in table.window_meta])


def report_line(name, passed, detail):
    print(f"ACCEPTANCE {name}: {'PASS' if passed else 'FAIL'} ({detail})")
    assert passed, detail


class TestCriterion1MechanismReproduction:
    def test_clusters_beats_linr_beats_trad_by_5pp(self):
        started = time.monotonic()
        spec = benchmark_spec(noise_std=0.3, subject_offset_std=0.0)
        scores = {
            variant: run_experiment(
                benchmark_config(spec, variant, seed=3,
                                 train_label_fraction=0.15)
            ).pooled_micro_f1
            for variant in ("Trad", "LinR", "Clusters")
        }
        elapsed = time.monotonic() - started

        # Oracle floor: nearest-centroid on the known latent actions must
        # leave >= 5 pp of headroom above Trad before the margin counts.
        table, _ = build_feature_table(
            benchmark_config(spec, "Trad", seed=3, train_label_fraction=1.0))
        sensor0 = select_sensor_columns(table, ["sensor0"])
        oracle = nearest_centroid_oracle(sensor0, window_actions(table),
                                         ACTION_TO_LABEL)
        assert oracle == pytest.approx(0.8611, abs=1e-3)
        assert oracle - scores["Trad"] >= 0.05

        # Frozen point values (deterministic pipeline).
        assert scores["Trad"] == pytest.approx(0.4524, abs=1e-3)
        assert scores["LinR"] == pytest.approx(0.6548, abs=1e-3)
        assert scores["Clusters"] == pytest.approx(0.8770, abs=1e-3)

        gap = scores["LinR"] - scores["Trad"]
        ok = (scores["Clusters"] > scores["LinR"] > scores["Trad"]
              and gap >= 0.05 and elapsed < 60.0)
        report_line(
            "criterion-1 mechanism reproduction", ok,
            f"Trad={scores['Trad']:.4f} LinR={scores['LinR']:.4f} "
            f"Clusters={scores['Clusters']:.4f} gap={100 * gap:.1f}pp "
            f"oracle={oracle:.4f} runtime={elapsed:.1f}s",
        )


class TestCriterion2BoostingHelpsUnderNoise:
    def test_linb_never_worse_and_beats_linr_on_seeded_instance(self):
        spec = benchmark_spec(noise_std=1.0, subject_offset_std=1.5)
        deltas = {}
        for exp_seed in (0, 1, 2):
            scores = {
                variant: run_experiment(
                    benchmark_config(spec, variant, seed=exp_seed,
                                     train_label_fraction=1.0)
                ).pooled_micro_f1
                for variant in ("LinR", "LinB")
            }
            deltas[exp_seed] = scores["LinB"] - scores["LinR"]
            if exp_seed == 1:
                seeded = scores

        # Oracle on the noisy instance: even perfect action knowledge
        # tops out low, so the small boosted margin is meaningful.
        table, _ = build_feature_table(
            benchmark_config(spec, "Trad", seed=1, train_label_fraction=1.0))
        sensor0 = select_sensor_columns(table, ["sensor0"])
        oracle = nearest_centroid_oracle(sensor0, window_actions(table),
                                         ACTION_TO_LABEL)
        assert oracle == pytest.approx(0.4365, abs=1e-3)

        never_worse = all(d >= -0.005 for d in deltas.values())
        strict = seeded["LinB"] > seeded["LinR"]
        assert seeded["LinR"] == pytest.approx(0.2857, abs=1e-3)
        assert seeded["LinB"] == pytest.approx(0.3095, abs=1e-3)
        ok = never_worse and strict
        report_line(
            "criterion-2 boosting under noise", ok,
            "deltas(pp)=" + ", ".join(f"seed{s}:{100 * d:+.1f}"
                                      for s, d in deltas.items())
            + f"; seeded LinR={seeded['LinR']:.4f} LinB={seeded['LinB']:.4f}"
            + f"; oracle={oracle:.4f}",
        )


class TestCriterion3ExternalData:
    def test_documented_external_data_target(self):
        print("ACCEPTANCE criterion-3 published-number reproduction: SKIP "
              "(requires externally converted Cooking/OPP/PAMAP CSVs; "
              "run the grid CLI on user-provided data)")
        pytest.skip("external datasets cannot ship with the repository")


class TestCriterion4ExactnessSuite:
    def test_exactness_suite(self):
        # micro-F1 == accuracy on 1000 random multiclass instances.
        rng = np.random.default_rng(42)
        f1_ok = True
        for _ in range(1000):
            k = int(rng.integers(2, 6))
            n = int(rng.integers(1, 25))
            true = [f"c{i}" for i in rng.integers(k, size=n)]
            pred = [f"c{i}" for i in rng.integers(k, size=n)]
            acc = sum(t == p for t, p in zip(true, pred)) / n
            f1_ok &= abs(micro_f1(true, pred) - acc) < 1e-12

        # Zero-noise affine mapping recovery.
        X = rng.normal(size=(40, 3))
        T = X @ rng.normal(size=(3, 4)) + rng.normal(size=4)
        mapper = RepresentationMapper(kind="linear", lam=0.0).fit(X, T)
        mse = float(((mapper.transform(X) - T) ** 2).mean())

        # SAMME closed-form points.
        samme_ok = (samme_alpha(0.5, 2) == 0.0
                    and abs(samme_alpha(0.25, 5) - np.log(12)) <= 1e-12)

        # k-means inertia non-increasing on 100 random instances.
        inertia_ok = True
        for seed in range(100):
            g = np.random.default_rng(seed)
            _, _, hist = kmeans(g.normal(size=(25, 3)), 4, g, n_restarts=1)
            inertia_ok &= all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))

        # Gradient checks against finite differences.
        Xg = rng.normal(size=(30, 4))
        tg = (Xg[:, 0] > 0).astype(float)
        log_err = finite_difference_check(
            lambda wb: logistic_loss_grad(wb, Xg, tg, lam=1.0),
            rng.normal(size=5) * 0.5)
        Y = np.zeros((30, 3))
        Y[np.arange(30), rng.integers(3, size=30)] = 1.0
        w = np.full(30, 1 / 30)
        soft_err = finite_difference_check(
            lambda wb: softmax_loss_grad(wb, Xg, Y, w, 0.1, (4, 3)),
            rng.normal(size=15) * 0.3)

        ok = (f1_ok and mse < 1e-8 and samme_ok and inertia_ok
              and log_err < 1e-4 and soft_err < 1e-4)
        report_line(
            "criterion-4 exactness suite", ok,
            f"f1-identity={f1_ok} mapping-mse={mse:.2e} samme={samme_ok} "
            f"inertia-monotone={inertia_ok} grad-err={log_err:.2e}/"
            f"{soft_err:.2e}",
        )


class TestCriterion5ProtocolSuite:
    def test_leak_check_and_determinism(self):
        spec = SyntheticSpec(
            n_subjects=3, n_sensors=2, n_actions=4,
            activities=(("walk", (0, 1) * 2), ("cook", (2, 3) * 2)),
            observability=((1.0,) * 4, (1.0,) * 4),
            noise_std=0.3, samples_per_action=40, seed=5,
            sampling_rate_hz=20.0,
        )
        config = ExperimentConfig(
            dataset=spec, window=WINDOW, test_sensor="sensor0",
            variant="LinB", k_per_sensor=4, seed=2,
            train_label_fraction=0.6,
        )
        # The harness asserts per fold that the held-out subject is absent
        # from every fitted table; a leak would raise inside run_experiment.
        a = run_experiment(config)
        b = run_experiment(config)
        leak_free = all(f.held_out not in f.train_subjects for f in a.folds)
        deterministic = a.to_json() == b.to_json()
        ok = leak_free and deterministic
        report_line(
            "criterion-5 protocol suite", ok,
            f"leak-free={leak_free} byte-identical-reports={deterministic}",
        )


class TestCriterion6DimensionArithmetic:
    def test_dimension_arithmetic(self):
        from sensorbridge import ClusterRepresentation

        five = make_table(n_rows=40, groups=tuple((f"g{i}", 2)
                                                  for i in range(5)))
        three = make_table(n_rows=40, groups=tuple((f"g{i}", 2)
                                                   for i in range(3)))
        d5 = ClusterRepresentation(k_per_sensor=3, seed=0).fit(five).output_dim
        d3 = ClusterRepresentation(k_per_sensor=3, seed=0).fit(three).output_dim
        ok = d5 == 15 and d3 == 9
        report_line("criterion-6 dimension arithmetic", ok,
                    f"5x3={d5} 3x3={d3}")
