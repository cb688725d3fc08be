"""End-to-end pipelines: parameter sweeps and replicated estimation studies."""

import math

import numpy as np
import pytest

from varshare.errors import ContractError
from varshare.estimators import KnnJob, McJob, ReplicationScheme
from varshare.experiments import EstimateConfig, _build_job, run_estimate, toycase_sweep
from varshare.gaussian import ToyCase, toycase_allocations


class TestToycaseSweep:
    def test_rows_match_the_direct_route(self):
        rows = toycase_sweep(ToyCase.EXOGENOUS_LINEAR, "rho", [0.0, 0.5])
        assert len(rows) == 6
        sh, pme = toycase_allocations(ToyCase.EXOGENOUS_LINEAR, rho=0.5)
        for row in rows:
            if row["param_value"] == 0.5:
                i = row["player"] - 1
                assert row["shapley"] == sh.shares[i]
                assert row["pme"] == pme.shares[i]
        assert rows[0]["param_name"] == "rho"

    def test_beta_sweep_holds_rho_fixed(self):
        rows = toycase_sweep(ToyCase.UNBALANCED_LINEAR, "beta", [2.0], rho=0.3)
        sh, _ = toycase_allocations(ToyCase.UNBALANCED_LINEAR, beta=2.0, rho=0.3)
        assert rows[0]["shapley"] == sh.shares[0]

    def test_alpha_only_for_interaction(self):
        with pytest.raises(ContractError, match="alpha"):
            toycase_sweep(ToyCase.EXOGENOUS_LINEAR, "alpha", [0.5])
        rows = toycase_sweep(ToyCase.INTERACTION_LINEAR, "alpha", [0.5])
        assert len(rows) == 2

    def test_beta_only_for_unbalanced(self):
        with pytest.raises(ContractError, match="beta"):
            toycase_sweep(ToyCase.SHAPLEY_JOKE, "beta", [2.0])

    def test_unknown_parameter_and_empty_grid(self):
        with pytest.raises(ContractError, match="param"):
            toycase_sweep(ToyCase.SHAPLEY_JOKE, "gamma", [0.0])
        with pytest.raises(ContractError, match="empty"):
            toycase_sweep(ToyCase.SHAPLEY_JOKE, "rho", [])


class TestBuildJob:
    def test_ishigami_mc(self):
        job, names = _build_job(EstimateConfig(model="ishigami", method="mc"))
        assert isinstance(job, McJob)
        assert names == ("X1", "X2", "X3", "X4")
        assert job.sampler.d == 4

    def test_ishigami_knn_dataset_is_seeded(self):
        cfg = EstimateConfig(model="ishigami", method="knn", n=50, seed=4)
        a, _ = _build_job(cfg)
        b, _ = _build_job(cfg)
        assert isinstance(a, KnnJob)
        assert np.array_equal(a.data.x, b.data.x)
        c, _ = _build_job(EstimateConfig(model="ishigami", method="knn", n=50, seed=5))
        assert not np.array_equal(a.data.x, c.data.x)

    def test_robot_is_knn_only(self):
        job, names = _build_job(EstimateConfig(model="robot", method="knn", n=60))
        assert isinstance(job, KnnJob) and job.data.d == 8
        assert names[0] == "A1" and names[4] == "L1"
        with pytest.raises(ContractError, match="knn"):
            _build_job(EstimateConfig(model="robot", method="mc"))

    def test_gaussian_linear_uses_the_case(self):
        cfg = EstimateConfig(
            model="gaussian-linear", method="mc", case="shapley-joke", rho=0.2
        )
        job, names = _build_job(cfg)
        assert isinstance(job, McJob) and names == ("X1", "X2")

    def test_unknown_model(self):
        with pytest.raises(ContractError, match="model"):
            _build_job(EstimateConfig(model="piston"))


class TestRunEstimate:
    def test_small_knn_study_reports_both_methods(self):
        cfg = EstimateConfig(
            model="gaussian-linear",
            method="knn",
            case="unbalanced-linear",
            rho=0.5,
            n=200,
            k=4,
            reps=3,
            seed=1,
        )
        result = run_estimate(cfg)
        assert result.study.scheme is ReplicationScheme.SUBSAMPLE_80
        assert {row["method"] for row in result.rows} == {"shapley", "pme"}
        assert len(result.rows) == 2 * 3
        for row in result.rows:
            assert row["ci_low"] <= row["mean"] <= row["ci_high"]
            assert row["replications"] == 3
            assert row["ci_level"] == 0.9
        assert not result.degenerate

    def test_small_mc_study_defaults_to_independent_seeds(self):
        cfg = EstimateConfig(
            model="gaussian-linear",
            method="mc",
            case="shapley-joke",
            rho=0.4,
            nv=300,
            no=20,
            ni=6,
            reps=2,
        )
        result = run_estimate(cfg)
        assert result.study.scheme is ReplicationScheme.INDEPENDENT_SEEDS
        shapley_means = [r["mean"] for r in result.rows if r["method"] == "shapley"]
        assert math.isclose(math.fsum(shapley_means), 1.0, abs_tol=1e-9)

    def test_explicit_scheme_wins(self):
        cfg = EstimateConfig(
            model="ishigami",
            method="knn",
            n=80,
            k=3,
            reps=2,
            scheme="independent-seeds",
        )
        result = run_estimate(cfg)
        assert result.study.scheme is ReplicationScheme.INDEPENDENT_SEEDS

    def test_bad_method_rejected(self):
        with pytest.raises(ContractError, match="method"):
            run_estimate(EstimateConfig(method="mlmc"))

    def test_run_is_deterministic(self):
        cfg = EstimateConfig(
            model="ishigami", method="knn", n=100, k=3, reps=2, seed=9
        )
        a = run_estimate(cfg)
        b = run_estimate(cfg)
        assert a.rows == b.rows
