"""End-to-end acceptance suite.

Each test exercises one acceptance criterion at its stated tolerance and prints
a single [PASS]/[FAIL] line (run with ``pytest -s tests/test_acceptance.py`` to
see them live). The expensive multi-seed studies come from session fixtures in
conftest.py and are shared with the module tests; every seed is fixed, so the
whole suite is deterministic.
"""

import time

import numpy as np

import cotrainlab as ct
from cotrainlab import cli
from cotrainlab.theory import default_audit_grid, monotonicity_audit

import test_cli  # reuses the small experiment config template


def report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


class TestErrorContraction:
    """Multi-seed run of the loop must contract the worst-view error geometrically."""

    def test_median_error_contracts(self, contraction_study):
        med = np.median(contraction_study.padded_err_max, axis=0)
        final_below_start = med[-1] < med[0]
        nonincreasing = sum(med[k + 1] <= med[k] for k in range(10))
        fit = ct.fit_contraction(med.tolist())
        in_range = 0.0 < fit.lambda_hat < 1.0
        fast_enough = contraction_study.elapsed < 60.0
        ok = final_below_start and nonincreasing >= 8 and in_range and fast_enough
        report(
            "error contraction (20 seeds)",
            ok,
            f"median err_max {med[0]:.4f} -> {med[-1]:.4f}, non-increasing in {nonincreasing}/10 "
            f"transitions, fitted slope {fit.lambda_hat:.3f}, runtime {contraction_study.elapsed:.1f}s",
        )
        assert final_below_start
        assert nonincreasing >= 8
        assert in_range
        assert fast_enough


class TestOneStepImprovement:
    """A handicapped view retrained on its peer's confident labels must improve."""

    def test_improvement_over_50_seeds(self, lemma_study):
        improved = float(np.mean([r.improved for r in lemma_study.rho0]))
        mean_before = float(np.mean([r.eps1_before for r in lemma_study.rho0]))
        mean_after = float(np.mean([r.eps1_after for r in lemma_study.rho0]))
        fast_enough = lemma_study.elapsed_rho0 < 60.0
        ok = improved >= 0.9 and mean_after < mean_before and fast_enough
        report(
            "one-step improvement (50 seeds)",
            ok,
            f"improved fraction {improved:.2f}, mean error {mean_before:.4f} -> {mean_after:.4f}, "
            f"runtime {lemma_study.elapsed_rho0:.1f}s",
        )
        assert improved >= 0.9
        assert mean_after < mean_before
        assert fast_enough

    def test_duplicated_views_improve_less_often(self, lemma_study):
        frac_indep = float(np.mean([r.improved for r in lemma_study.rho0]))
        frac_shared = float(np.mean([r.improved for r in lemma_study.rho1]))
        ok = frac_shared < frac_indep
        report(
            "independence mechanism",
            ok,
            f"improved fraction {frac_indep:.2f} with independent views vs {frac_shared:.2f} with duplicated views",
        )
        assert frac_shared < frac_indep


class TestBenefitSigns:
    def test_zero_sign_violations_on_interior_grid(self):
        start = time.monotonic()
        audit = monotonicity_audit(default_audit_grid())
        elapsed = time.monotonic() - start
        gamma_claims = ("gamma_vs_frac", "gamma_vs_disagreement", "gamma_vs_indep")
        ok = audit.violations == 0 and all(audit.claim_status[c] == "pass" for c in gamma_claims) and elapsed < 1.0
        report(
            "benefit-term partial signs",
            ok,
            f"{audit.violations} violations across {len(audit.rows)} finite differences, runtime {elapsed * 1e3:.0f}ms",
        )
        assert audit.violations == 0
        for claim in gamma_claims:
            assert audit.claim_status[claim] == "pass"
        assert elapsed < 1.0


class TestBoundTightensWithUnlabeled:
    def test_strict_monotonicity_over_unlabeled_sweep(self):
        bounds, gammas = [], []
        for n_u in range(0, 10001, 100):
            frac = n_u / (100 + n_u) if n_u else 0.0
            rep = ct.generalization_bound(
                ct.BoundInputs(0.1, 100, n_u, 10.0, 0.05, 1.0, 1.0, ct.GammaInputs(frac, 0.1, 0.9))
            )
            bounds.append(rep.bound)
            gammas.append(rep.gamma_term)
        decreasing = all(b < a for a, b in zip(bounds, bounds[1:]))
        increasing = all(b > a for a, b in zip(gammas, gammas[1:]))
        ok = decreasing and increasing
        report(
            "bound tightens with unlabeled data",
            ok,
            f"bound {bounds[0]:.4f} -> {bounds[-1]:.4f} strictly decreasing={decreasing}, "
            f"benefit strictly increasing={increasing} over {len(bounds)} points",
        )
        assert decreasing
        assert increasing


class TestBoundDecomposition:
    def test_identity_on_random_inputs_and_spot_value(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(1000):
            n_l = int(rng.integers(11, 5000))
            rep = ct.generalization_bound(
                ct.BoundInputs(
                    empirical_risk=float(rng.random()),
                    n_labeled=n_l,
                    n_unlabeled=int(rng.integers(0, 10**6)),
                    d_eff=float(rng.uniform(0.5, n_l - 1)),
                    delta=float(rng.uniform(1e-3, 1 - 1e-3)),
                    c1=float(rng.uniform(0.1, 3.0)),
                    c2=float(rng.uniform(0.1, 3.0)),
                    gamma_inputs=ct.GammaInputs(float(rng.random()), float(rng.random()), float(rng.random())),
                )
            )
            recomposed = rep.empirical_risk_term + rep.complexity_term - rep.gamma_term + rep.confidence_term
            worst = max(worst, abs(rep.bound - recomposed))
        # spot value, derived by hand before the build: 0.1 + 0.2215 + 0 + 0.0547 = 0.3762
        spot = ct.generalization_bound(
            ct.BoundInputs(0.1, 1000, 0, 10.0, 0.05, 1.0, 1.0, ct.GammaInputs(0.0, 0.5, 0.5))
        )
        spot_ok = abs(spot.bound - 0.3762) < 1e-3
        ok = worst <= 1e-12 and spot_ok
        report(
            "bound decomposition identity",
            ok,
            f"max identity residual {worst:.2e} over 1000 inputs, spot value {spot.bound:.4f} vs 0.3762",
        )
        assert worst <= 1e-12
        assert spot_ok


class TestGradientSuite:
    def test_both_losses_match_finite_differences(self):
        step = 1e-5
        rng = np.random.default_rng(99)
        start = time.monotonic()
        worst = 0.0

        def central_diff(loss_fn, w):
            out = np.zeros_like(w)
            for i in range(w.size):
                wp, wm = w.copy(), w.copy()
                wp[i] += step
                wm[i] -= step
                out[i] = (loss_fn(wp) - loss_fn(wm)) / (2 * step)
            return out

        for _ in range(100):
            dim = int(rng.integers(1, 9))
            w = rng.normal(size=dim + 1)
            batch = [(rng.normal(size=dim), int(rng.random() < 0.5)) for _ in range(int(rng.integers(2, 12)))]
            l2 = float(rng.random() * 0.2)
            _, grad = ct.supervised_loss_grad(ct.ViewClassifier(1, w), batch, l2)
            numeric = central_diff(lambda wv: ct.supervised_loss_grad(ct.ViewClassifier(1, wv), batch, l2)[0], w)
            worst = max(worst, np.linalg.norm(grad - numeric) / max(np.linalg.norm(numeric), 1e-8))

            own = [rng.normal(size=dim) for _ in range(int(rng.integers(1, 10)))]
            peer = rng.random(len(own)).tolist()
            _, agrad = ct.agreement_loss_grad(ct.ViewClassifier(1, w), own, peer)
            anumeric = central_diff(lambda wv: ct.agreement_loss_grad(ct.ViewClassifier(1, wv), own, peer)[0], w)
            worst = max(worst, np.linalg.norm(agrad - anumeric) / max(np.linalg.norm(anumeric), 1e-8))

        elapsed = time.monotonic() - start
        ok = worst < 1e-4 and elapsed < 5.0
        report(
            "gradient finite-difference suite",
            ok,
            f"worst relative error {worst:.2e} over 100 configurations of each loss, runtime {elapsed:.2f}s",
        )
        assert worst < 1e-4
        assert elapsed < 5.0


class TestFigureReproduction:
    def test_csv_values_reproduce_stated_shapes(self, tmp_path):
        config = tmp_path / "exp.toml"
        config.write_text(test_cli.BASE_CONFIG, encoding="utf-8")
        out = tmp_path / "figs"
        assert cli.main(["figures", "--config", str(config), "--out", str(out)]) == 0

        fig1 = test_cli.read_rows(out / "fig1.csv")
        eps0, c_min = 0.5, 0.02
        decay_ok = True
        by_lambda: dict[float, list[tuple[int, float]]] = {}
        for row in fig1:
            by_lambda.setdefault(float(row["lambda"]), []).append((int(row["round"]), float(row["eps_max"])))
        for lam, series in by_lambda.items():
            series.sort()
            values = [v for _, v in series]
            fixed_point = c_min / (1.0 - lam)
            rounds = len(values) - 1
            if abs(values[-1] - fixed_point) > lam**rounds * abs(eps0 - fixed_point) + 1e-9:
                decay_ok = False
            if not all(b <= a for a, b in zip(values, values[1:])):  # eps0 above the floor: decay is monotone
                decay_ok = False

        fig2 = test_cli.read_rows(out / "fig2.csv")
        bounds = [float(r["bound"]) for r in fig2]
        fig2_ok = all(b < a for a, b in zip(bounds, bounds[1:]))

        fig3 = test_cli.read_rows(out / "fig3.csv")
        best = max(fig3, key=lambda r: float(r["gamma"]))
        fig3_ok = (
            float(best["gamma"]) == 0.5
            and float(best["disagreement"]) == 0.0
            and float(best["indep"]) == 1.0
        )

        ok = decay_ok and fig2_ok and fig3_ok
        report(
            "figure CSV reproduction",
            ok,
            f"fig1 decays to its fixed points={decay_ok}, fig2 strictly decreasing={fig2_ok}, "
            f"fig3 peak {best['gamma']} at (d={best['disagreement']}, indep={best['indep']})",
        )
        assert decay_ok
        assert fig2_ok
        assert fig3_ok


class TestDegenerateEquivalences:
    def test_no_op_runs_equal_supervised_baselines_bitwise(self):
        gen = ct.GeneratorConfig(class_separation=3.0, n_labeled=20, n_unlabeled=0, n_test=100, seed=31)
        ds = ct.generate_dataset(gen)
        cfg = ct.CoTrainConfig(rounds=5, train=ct.TrainConfig(seed=31), seed=31)
        clf1, clf2, traj, _ = ct.run_cotraining(ds, cfg)
        base1 = ct.train(ct.new_classifier(1, 5, seed=31), [(i.view1, i.oracle_label) for i in ds.labeled], [], [], ct.TrainConfig(seed=31))
        base2 = ct.train(ct.new_classifier(2, 5, seed=31), [(i.view2, i.oracle_label) for i in ds.labeled], [], [], ct.TrainConfig(seed=31))
        empty_pool_ok = (
            np.array_equal(clf1.weights, base1.weights)
            and np.array_equal(clf2.weights, base2.weights)
            and [m.round for m in traj] == [0, 1]
        )

        gen2 = ct.GeneratorConfig(class_separation=3.0, n_labeled=20, n_unlabeled=100, n_test=100, seed=32)
        ds2 = ct.generate_dataset(gen2)
        clip = 1e-3
        cfg2 = ct.CoTrainConfig(rounds=5, lambda_agree=0.0, tau_pseudo=1 - clip, train=ct.TrainConfig(prob_clip=clip, seed=32), seed=32)
        d1, d2, _, recs = ct.run_cotraining(ds2, cfg2)
        b1 = ct.train(ct.new_classifier(1, 5, prob_clip=clip, seed=32), [(i.view1, i.oracle_label) for i in ds2.labeled], [], [], ct.TrainConfig(prob_clip=clip, seed=32))
        b2 = ct.train(ct.new_classifier(2, 5, prob_clip=clip, seed=32), [(i.view2, i.oracle_label) for i in ds2.labeled], [], [], ct.TrainConfig(prob_clip=clip, seed=32))
        no_harvest_ok = (
            np.array_equal(d1.weights, b1.weights) and np.array_equal(d2.weights, b2.weights) and recs == []
        )

        ok = empty_pool_ok and no_harvest_ok
        report(
            "degenerate equivalences",
            ok,
            f"empty-pool run bit-identical={empty_pool_ok}, disabled-harvest run bit-identical={no_harvest_ok}",
        )
        assert empty_pool_ok
        assert no_harvest_ok
