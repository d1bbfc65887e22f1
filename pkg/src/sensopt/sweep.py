"""Interpolated design-space sweep over a trained surrogate.

build_interpolated_grid() streams settings combinations from per-input
arithmetic progressions; predict_curves() turns them into 200-point
curves through the model; rank_candidates() assigns dense ascending
ranks per criterion; select() finds the smallest K whose per-criterion
top-K sets intersect, breaking ties by rank sum and then lexicographic
settings order.

Curves are scored one at a time and discarded, so peak memory is one
score record per candidate, never the full point cloud.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .curves import Curve, CriteriaValues, criteria
from .errors import ConfigurationError, SelectionError
from .network import Model, predict
from .oracle import CATEGORY_COUNT, INPUT5_COUNT, ROWS_PER_COMBINATION, SETTING_NAMES, SETTING_RANGES

ALL_CRITERIA = (1, 2, 3, 4)
DEFAULT_ROW_BUDGET = 24_000_000
DEFAULT_POINTS_PER_AXIS = 9


def count_experiments(resolution: int, n_inputs: int) -> int:
    """Number of exhaustive experiments at `resolution` values per input.

    Python integers do not overflow, so arbitrarily large grids report
    their exact count.
    """
    if resolution < 1 or n_inputs < 1:
        raise ConfigurationError("resolution and n_inputs must be at least 1")
    return resolution**n_inputs


@dataclass(frozen=True)
class AxisSpec:
    """Arithmetic progression minimum, minimum + step, ... clipped at maximum."""

    minimum: float
    maximum: float
    step: float

    def __post_init__(self):
        if self.step <= 0:
            raise ConfigurationError(f"step must be positive, got {self.step!r}")
        if self.maximum < self.minimum:
            raise ConfigurationError(
                f"maximum {self.maximum!r} below minimum {self.minimum!r}"
            )

    @property
    def count(self) -> int:
        # The epsilon absorbs float noise when (max - min) / step is integral.
        return int(math.floor((self.maximum - self.minimum) / self.step + 1e-9)) + 1

    def values(self) -> np.ndarray:
        vals = self.minimum + self.step * np.arange(self.count)
        return np.minimum(vals, self.maximum)


@dataclass(frozen=True)
class InterpolationSpec:
    """One axis per settings input, in (input1, input2, input3, input4, input6) order.

    Axes must stay inside the recorded grid ranges, and the implied row
    count (combinations x 200) must fit the budget; both are checked here,
    before any work starts.
    """

    axes: tuple[AxisSpec, ...]
    row_budget: int = DEFAULT_ROW_BUDGET

    def __post_init__(self):
        if len(self.axes) != len(SETTING_NAMES):
            raise ConfigurationError(f"expected {len(SETTING_NAMES)} axes, got {len(self.axes)}")
        for name, axis, (lo, hi) in zip(SETTING_NAMES, self.axes, SETTING_RANGES):
            if axis.minimum < lo or axis.maximum > hi:
                raise ConfigurationError(
                    f"{name} axis [{axis.minimum}, {axis.maximum}] outside recorded range [{lo}, {hi}]"
                )
        rows = self.combination_count * ROWS_PER_COMBINATION
        if rows > self.row_budget:
            raise ConfigurationError(
                f"sweep would simulate {rows} rows, over the budget of {self.row_budget}"
            )

    @property
    def combination_count(self) -> int:
        n = 1
        for axis in self.axes:
            n *= axis.count
        return n


def default_sweep_spec(
    points_per_axis: int = DEFAULT_POINTS_PER_AXIS, row_budget: int = DEFAULT_ROW_BUDGET
) -> InterpolationSpec:
    """Uniform spec spanning each input's full recorded range."""
    if points_per_axis < 2:
        raise ConfigurationError("points_per_axis must be at least 2")
    axes = tuple(
        AxisSpec(minimum=lo, maximum=hi, step=(hi - lo) / (points_per_axis - 1))
        for lo, hi in SETTING_RANGES
    )
    return InterpolationSpec(axes=axes, row_budget=row_budget)


def build_interpolated_grid(spec: InterpolationSpec) -> Iterator[tuple[float, ...]]:
    """Stream combinations in lexicographic order; never materializes the grid."""
    value_lists = [tuple(float(v) for v in axis.values()) for axis in spec.axes]
    return itertools.product(*value_lists)


def _batched(iterable: Iterable, size: int) -> Iterator[list]:
    iterator = iter(iterable)
    while True:
        chunk = list(itertools.islice(iterator, size))
        if not chunk:
            return
        yield chunk


def predict_curves(
    model: Model,
    grid: Iterable[tuple[float, ...]],
    chunk_combinations: int = 64,
) -> Iterator[Curve]:
    """Predict one 200-point curve per combination, in grid order.

    Combinations are batched through the network for throughput but
    yielded one curve at a time. Grid values outside the model's
    normalization range raise a RangeError naming the input.
    """
    if chunk_combinations < 1:
        raise ConfigurationError("chunk_combinations must be at least 1")
    input5 = np.repeat(np.arange(INPUT5_COUNT, dtype=np.float64), CATEGORY_COUNT)
    category_block = np.tile(np.arange(CATEGORY_COUNT, dtype=np.float64), INPUT5_COUNT)
    for chunk in _batched(grid, chunk_combinations):
        m = len(chunk)
        numeric = np.empty((m * ROWS_PER_COMBINATION, 6))
        for j, combo in enumerate(chunk):
            block = numeric[j * ROWS_PER_COMBINATION : (j + 1) * ROWS_PER_COMBINATION]
            block[:, 0:4] = np.asarray(combo[0:4], dtype=np.float64)
            block[:, 4] = input5
            block[:, 5] = combo[4]
        categories = np.tile(category_block, m)
        outputs = predict(model, numeric, categories)
        for j, combo in enumerate(chunk):
            rows = outputs[j * ROWS_PER_COMBINATION : (j + 1) * ROWS_PER_COMBINATION]
            yield Curve.from_samples(
                settings=combo, signal=rows[:, 0], snr=rows[:, 1], output3=rows[:, 2]
            )


@dataclass(frozen=True)
class CandidateScore:
    """A combination, its criteria, and its dense rank per criterion.

    ranks[i - 1] is the 0-based dense ascending rank under criterion i,
    or None when the candidate is unscorable there (NaN criterion) or the
    criterion was not ranked.
    """

    settings: tuple[float, ...]
    criteria: CriteriaValues
    ranks: tuple[int | None, int | None, int | None, int | None]

    def worst_rank(self, subset: Sequence[int]) -> int | None:
        picked = [self.ranks[i - 1] for i in subset]
        if any(r is None for r in picked):
            return None
        return max(picked)

    def rank_sum(self, subset: Sequence[int]) -> int:
        return sum(self.ranks[i - 1] for i in subset)


def _check_subset(subset: Sequence[int]) -> tuple[int, ...]:
    out = tuple(sorted(set(int(i) for i in subset)))
    if not out or any(i not in ALL_CRITERIA for i in out):
        raise ConfigurationError(f"criterion subset must be a nonempty subset of {ALL_CRITERIA}")
    return out


def _dense_ranks(values: np.ndarray) -> list[int | None]:
    """0-based dense ascending ranks; NaN entries get None."""
    finite = ~np.isnan(values)
    ranks: list[int | None] = [None] * values.size
    if not np.any(finite):
        return ranks
    distinct = np.unique(values[finite])
    positions = np.searchsorted(distinct, values[finite])
    for index, rank in zip(np.nonzero(finite)[0], positions):
        ranks[index] = int(rank)
    return ranks


def rank_candidates(
    scored: Sequence[tuple[tuple[float, ...], CriteriaValues]],
    subset: Sequence[int] = ALL_CRITERIA,
) -> list[CandidateScore]:
    """Assign dense ascending ranks per criterion in `subset`.

    Ties share a rank. The returned list is sorted by settings
    (lexicographically), so the output is independent of input order.
    """
    subset = _check_subset(subset)
    if not scored:
        raise ConfigurationError("no candidates to rank")
    ordered = sorted(scored, key=lambda item: item[0])
    rank_columns: dict[int, list[int | None]] = {}
    for criterion in subset:
        column = np.array(
            [item[1].as_tuple()[criterion - 1] for item in ordered], dtype=np.float64
        )
        rank_columns[criterion] = _dense_ranks(column)
    out = []
    for row, (settings, crit) in enumerate(ordered):
        ranks = tuple(
            rank_columns[criterion][row] if criterion in subset else None
            for criterion in ALL_CRITERIA
        )
        out.append(CandidateScore(settings=tuple(settings), criteria=crit, ranks=ranks))
    return out


@dataclass(frozen=True)
class SelectionResult:
    settings: tuple[float, ...]
    criteria: CriteriaValues
    k: int
    subset: tuple[int, ...]


def select(ranked: Sequence[CandidateScore], subset: Sequence[int]) -> SelectionResult:
    """Smallest-K prefix-intersection selection over `subset`.

    K is the smallest value for which the per-criterion top-K sets (rank
    < K) share a candidate. Among that intersection the lowest rank sum
    wins; remaining ties go to the lexicographically smallest settings.
    Candidates unscorable on any subset criterion are excluded.

    Raises:
        SelectionError: every candidate is unscorable on the subset.
    """
    subset = _check_subset(subset)
    worst = [(c.worst_rank(subset), c) for c in ranked]
    scorable = [(w, c) for w, c in worst if w is not None]
    if not scorable:
        raise SelectionError(f"no candidate is scorable on criteria {subset}")
    k = min(w for w, _ in scorable) + 1
    pool = [c for w, c in scorable if w <= k - 1]
    winner = min(pool, key=lambda c: (c.rank_sum(subset), c.settings))
    return SelectionResult(
        settings=winner.settings, criteria=winner.criteria, k=k, subset=subset
    )


@dataclass
class SweepResult:
    """Ranked candidates plus the selection under each criterion subset."""

    candidates: list[CandidateScore]
    selections: dict[tuple[int, ...], SelectionResult]

    def summary(self) -> dict:
        return {
            "candidate_count": len(self.candidates),
            "selections": {
                subset_label(subset): {
                    "settings": dict(zip(SETTING_NAMES, sel.settings)),
                    "criteria": {
                        "c1": sel.criteria.c1,
                        "c2": sel.criteria.c2,
                        "c3": sel.criteria.c3,
                        "c4": sel.criteria.c4,
                    },
                    "k": sel.k,
                    "criteria_subset": list(sel.subset),
                }
                for subset, sel in self.selections.items()
            },
        }


def subset_label(subset: Sequence[int]) -> str:
    return "".join(f"c{i}" for i in sorted(subset))


def run_sweep(
    model: Model,
    spec: InterpolationSpec,
    subsets: Sequence[Sequence[int]] = (ALL_CRITERIA, (1, 2, 3)),
    chunk_combinations: int = 64,
) -> SweepResult:
    """Score every combination of `spec` and select under each subset."""
    scored = [
        (curve.settings, criteria(curve))
        for curve in predict_curves(model, build_interpolated_grid(spec), chunk_combinations)
    ]
    ranked = rank_candidates(scored, ALL_CRITERIA)
    selections = {}
    for subset in subsets:
        checked = _check_subset(subset)
        selections[checked] = select(ranked, checked)
    return SweepResult(candidates=ranked, selections=selections)


def write_report_csv(result: SweepResult, path) -> None:
    """Flat CSV of every candidate: settings, criteria, ranks, selected flags."""
    subsets = sorted(result.selections)
    selected_settings = {s: result.selections[s].settings for s in subsets}
    with open(path, "w", newline="") as fh:
        rank_names = [f"rank_c{i}" for i in ALL_CRITERIA]
        flag_names = [f"selected_{subset_label(s)}" for s in subsets]
        fh.write(",".join([*SETTING_NAMES, "c1", "c2", "c3", "c4", *rank_names, *flag_names]))
        fh.write("\n")
        for cand in result.candidates:
            fields = [f"{v:.17g}" for v in cand.settings]
            fields += [f"{v:.17g}" for v in cand.criteria.as_tuple()]
            fields += ["" if r is None else str(r) for r in cand.ranks]
            fields += [
                "1" if cand.settings == selected_settings[s] else "0" for s in subsets
            ]
            fh.write(",".join(fields) + "\n")
