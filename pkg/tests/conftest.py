"""Shared fixtures: generated datasets, trained models, scalar references."""

import math
import time
from typing import NamedTuple

import numpy as np
import pytest

from sensopt.data import SampleTable
from sensopt.network import Model, NetworkConfig
from sensopt.oracle import TABLE1, SensorOracle, generate_dataset
from sensopt.training import TrainConfig, TrainHistory, prepare_training_data, train


@pytest.fixture(scope="session")
def small_dataset() -> SampleTable:
    """6,400 rows: the 2-values-per-input corner grid, noise free."""
    oracle = SensorOracle(seed=7)
    return generate_dataset(oracle, TABLE1.subsample(2))


@pytest.fixture(scope="session")
def small_model(small_dataset) -> Model:
    """A small surrogate trained just long enough to be usable in sweeps."""
    arrays, norm, _ = prepare_training_data(small_dataset, seed=3)
    config = NetworkConfig(hidden=(32, 32))
    params, _ = train(
        config,
        arrays["x_train"],
        arrays["y_train"],
        arrays["x_val"],
        arrays["y_val"],
        TrainConfig(epochs=15, seed=3),
    )
    return Model(config=config, params=params, normalization=norm)


class ConvergedSetup(NamedTuple):
    oracle: SensorOracle
    model: Model
    history: TrainHistory
    train_seconds: float


@pytest.fixture(scope="session")
def converged_setup() -> ConvergedSetup:
    """A default-config training run on the 3-values-per-input grid.

    48,600 rows, 100 epochs: converged enough for the interpolation
    sweeps, at around a minute of wall time. Shared session-wide because
    several end-to-end checks need the same surrogate.
    """
    started = time.monotonic()
    oracle = SensorOracle(seed=0)
    table = generate_dataset(oracle, TABLE1.subsample(3))
    arrays, norm, _ = prepare_training_data(table, seed=0)
    config = NetworkConfig()
    params, history = train(
        config,
        arrays["x_train"],
        arrays["y_train"],
        arrays["x_val"],
        arrays["y_val"],
        TrainConfig(),
    )
    model = Model(config=config, params=params, normalization=norm)
    return ConvergedSetup(oracle, model, history, time.monotonic() - started)


def spearman(a, b) -> float:
    """Rank correlation of two equal-length vectors (no tie correction)."""
    ra = np.argsort(np.argsort(np.asarray(a)))
    rb = np.argsort(np.argsort(np.asarray(b)))
    return float(np.corrcoef(ra, rb)[0, 1])


def scalar_criteria(signal, snr, output3):
    """Plain-Python reference for the four curve criteria.

    No numpy, no shared code with the implementation: sorts the points,
    solves the low-signal least-squares line in closed form, then walks
    the lists with scalar math.
    """
    points = sorted(zip(signal, snr, output3))
    sig = [p[0] for p in points]
    sn = [p[1] for p in points]
    o3 = [p[2] for p in points]

    xs = [math.log10(s) for s in sig if s < 2e3]
    ys = [y for s, y in zip(sig, sn) if s < 2e3]
    mean_x = sum(xs) / len(xs)
    mean_y = sum(ys) / len(ys)
    sxx = sum((x - mean_x) ** 2 for x in xs)
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    line = [slope * math.log10(s) + intercept for s in sig]

    c1 = sum(abs(5.0 * math.log10(s) - y) for s, y in zip(sig, sn)) / len(sig)
    drops = [l - y for s, y, l in zip(sig, sn, line) if 3e3 <= s <= 1e4]
    c2 = max(max(drops), 0.0) if drops else float("nan")
    c3 = sum(abs(l - y) for l, y in zip(line, sn)) / len(sig)
    c4 = sum(o3) / len(o3)
    return c1, c2, c3, c4


def brute_force_select(scored, subset):
    """Reference for smallest-K selection, written as the definition reads.

    `scored` holds (settings, (c1, c2, c3, c4)) pairs. Grows K from 1 and
    returns ((settings, k)) for the first K whose per-criterion top-K sets
    intersect, or None when nothing is scorable.
    """
    ranks = {}
    for crit in subset:
        vals = [c[crit - 1] for _, c in scored]
        finite = sorted({v for v in vals if not math.isnan(v)})
        ranks[crit] = [
            None if math.isnan(v) else finite.index(v) for v in vals
        ]
    scorable = [
        i for i in range(len(scored))
        if all(ranks[crit][i] is not None for crit in subset)
    ]
    if not scorable:
        return None
    for k in range(1, len(scored) + 1):
        pool = [
            i for i in scorable
            if all(ranks[crit][i] <= k - 1 for crit in subset)
        ]
        if pool:
            best = min(
                pool,
                key=lambda i: (sum(ranks[crit][i] for crit in subset), scored[i][0]),
            )
            return scored[best][0], k
    return None


def random_table(rng: np.random.Generator, n_rows: int) -> SampleTable:
    """Random but semantically valid sample rows for I/O round trips."""
    values = np.empty((n_rows, 10))
    values[:, 0] = rng.uniform(418, 510, n_rows)
    values[:, 1] = rng.uniform(112, 144, n_rows)
    values[:, 2] = rng.uniform(400, 500, n_rows)
    values[:, 3] = rng.uniform(2850, 3650, n_rows)
    values[:, 4] = rng.integers(0, 50, n_rows)
    values[:, 5] = rng.uniform(3200, 4000, n_rows)
    values[:, 6] = rng.integers(0, 4, n_rows)
    values[:, 7] = 10.0 ** rng.uniform(0.3, 6.0, n_rows)
    values[:, 8] = rng.uniform(0.5, 32.0, n_rows)
    values[:, 9] = rng.uniform(0.5, 5.0, n_rows)
    return SampleTable(values)
