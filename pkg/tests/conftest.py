"""Shared fixtures: the multi-seed runs reused by both module and acceptance tests.

The contraction study (20 seeds) and the one-step teaching study (50 seeds at
two dependence settings) are the expensive runs; they execute once per session
and every test reads from the cached results. All seeds are fixed, so every
number asserted anywhere in the suite is reproducible bit-for-bit.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

import numpy as np
import pytest

import cotrainlab as ct

CONTRACTION_SEEDS = tuple(range(20))
LEMMA_SEEDS = tuple(range(50))
LEMMA_HANDICAP = 5


def contraction_generator_config(seed: int) -> ct.GeneratorConfig:
    return ct.GeneratorConfig(
        dim_view1=8,
        dim_view2=8,
        latent_dim=8,
        class_separation=3.0,
        noise_sigma=1.0,
        rho=0.0,
        n_labeled=20,
        n_unlabeled=500,
        n_test=2000,
        class_balance=0.5,
        seed=seed,
    )


def contraction_cotrain_config(seed: int) -> ct.CoTrainConfig:
    return ct.CoTrainConfig(
        rounds=10,
        tau_pseudo=0.8,
        tau_agree=0.5,
        k_pseudo=20,
        lambda_agree=0.1,
        accumulate_pseudo=True,
        train=ct.TrainConfig(learning_rate=0.5, epochs=200, seed=seed),
        seed=seed,
    )


def lemma_generator_config(seed: int, rho: float) -> ct.GeneratorConfig:
    return ct.GeneratorConfig(
        dim_view1=5,
        dim_view2=5,
        latent_dim=5,
        class_separation=3.0,
        noise_sigma=1.0,
        rho=rho,
        n_labeled=200,
        n_unlabeled=1000,
        n_test=2000,
        class_balance=0.5,
        seed=seed,
    )


def lemma_cotrain_config(seed: int) -> ct.CoTrainConfig:
    return ct.CoTrainConfig(tau_pseudo=0.8, train=ct.TrainConfig(seed=seed), seed=seed)


@dataclass
class ContractionStudy:
    trajectories: list[list[ct.RoundMetrics]]
    padded_err_max: np.ndarray  # (n_seeds, rounds + 1)
    records: list[list[ct.PseudoLabelRecord]]
    elapsed: float


@pytest.fixture(scope="session")
def contraction_study() -> ContractionStudy:
    rounds = 10
    trajectories, all_records = [], []
    start = time.monotonic()
    for seed in CONTRACTION_SEEDS:
        ds = ct.generate_dataset(contraction_generator_config(seed))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            _, _, traj, records = ct.run_cotraining(ds, contraction_cotrain_config(seed))
        trajectories.append(traj)
        all_records.append(records)
    elapsed = time.monotonic() - start
    padded = np.array(
        [[t[min(k, len(t) - 1)].err_max for k in range(rounds + 1)] for t in trajectories]
    )
    return ContractionStudy(trajectories, padded, all_records, elapsed)


@dataclass
class LemmaStudy:
    rho0: list[ct.LemmaReport]
    rho1: list[ct.LemmaReport]
    elapsed_rho0: float


@pytest.fixture(scope="session")
def lemma_study() -> LemmaStudy:
    reports: dict[float, list[ct.LemmaReport]] = {}
    elapsed_rho0 = 0.0
    for rho in (0.0, 1.0):
        start = time.monotonic()
        out = []
        for seed in LEMMA_SEEDS:
            ds = ct.generate_dataset(lemma_generator_config(seed, rho))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                out.append(ct.one_step_lemma_experiment(ds, lemma_cotrain_config(seed), LEMMA_HANDICAP))
        reports[rho] = out
        if rho == 0.0:
            elapsed_rho0 = time.monotonic() - start
    return LemmaStudy(rho0=reports[0.0], rho1=reports[1.0], elapsed_rho0=elapsed_rho0)
