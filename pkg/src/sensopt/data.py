"""Sample table container, normalization transforms, partition splits and CSV I/O.

A sample row is the 10-tuple
(input1..input4, input5, input6, category, signal, snr, output3).
The six numeric inputs are normalized by a per-input maximum, the
category becomes a 4-way one-hot block, and the outputs are scaled to
[0, 1] after a log10 transform of the signal. Maxima are fitted from the
training partition and persisted with the model, so encoding is a pure
function of (row, normalization spec).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, CsvParseError, DomainError, RangeError

COLUMNS = (
    "input1",
    "input2",
    "input3",
    "input4",
    "input5",
    "input6",
    "category",
    "signal",
    "snr",
    "output3",
)
COLUMN_INDEX = {name: i for i, name in enumerate(COLUMNS)}

N_NUMERIC_INPUTS = 6
N_CATEGORIES = 4
N_OUTPUTS = 3
ENCODED_INPUT_SIZE = N_NUMERIC_INPUTS + N_CATEGORIES

TRAIN, VALIDATION, TEST = 0, 1, 2
PARTITION_NAMES = {TRAIN: "train", VALIDATION: "validation", TEST: "test"}
DEFAULT_FRACTIONS = (0.81, 0.09, 0.10)

# 17 significant digits round-trip any float64 exactly.
_FLOAT_FMT = "%.17g"


class SampleTable:
    """Immutable-by-convention wrapper around an (n, 10) float64 array."""

    __slots__ = ("values",)

    def __init__(self, values: np.ndarray):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != len(COLUMNS):
            raise ConfigurationError(
                f"sample table must have shape (n, {len(COLUMNS)}), got {arr.shape}"
            )
        self.values = arr

    def __len__(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, COLUMN_INDEX[name]]

    def select(self, indices: np.ndarray) -> "SampleTable":
        """Return a new table holding the rows at `indices`, in that order."""
        return SampleTable(self.values[np.asarray(indices)])


@dataclass(frozen=True)
class NormalizationSpec:
    """Per-column scaling constants.

    Attributes:
        input_max: maximum each of the 6 numeric inputs may assume.
        output_max: maxima of (log10(signal), snr, output3).
        signal_log_base: base of the signal log transform.
    """

    input_max: tuple[float, ...]
    output_max: tuple[float, ...]
    signal_log_base: float = 10.0

    def __post_init__(self):
        if len(self.input_max) != N_NUMERIC_INPUTS:
            raise ConfigurationError(
                f"expected {N_NUMERIC_INPUTS} input maxima, got {len(self.input_max)}"
            )
        if len(self.output_max) != N_OUTPUTS:
            raise ConfigurationError(
                f"expected {N_OUTPUTS} output maxima, got {len(self.output_max)}"
            )
        if any(m <= 0 for m in self.input_max) or any(m <= 0 for m in self.output_max):
            raise ConfigurationError("normalization maxima must all be positive")
        if self.signal_log_base <= 1:
            raise ConfigurationError("signal log base must exceed 1")


def fit_normalization(table: SampleTable) -> NormalizationSpec:
    """Compute normalization maxima from the rows of `table`.

    Fit this on the training partition only, so held-out rows never leak
    into the scaling constants.
    """
    if len(table) == 0:
        raise ConfigurationError("cannot fit normalization on an empty table")
    signal = table.column("signal")
    if np.any(signal <= 0):
        raise DomainError("signal values must be positive to fit a log transform")
    input_max = tuple(float(table.values[:, j].max()) for j in range(N_NUMERIC_INPUTS))
    output_max = (
        float(np.log10(signal).max()),
        float(table.column("snr").max()),
        float(table.column("output3").max()),
    )
    return NormalizationSpec(input_max=input_max, output_max=output_max)


def _check_category(category: np.ndarray) -> np.ndarray:
    cat = np.asarray(category, dtype=np.float64)
    rounded = np.rint(cat)
    if np.any(cat != rounded) or np.any(rounded < 0) or np.any(rounded >= N_CATEGORIES):
        raise DomainError(
            f"category values must be integers in 0..{N_CATEGORIES - 1}"
        )
    return rounded.astype(np.intp)


def encode_inputs(
    numeric: np.ndarray, category: np.ndarray, norm: NormalizationSpec
) -> np.ndarray:
    """Encode raw inputs into the network's 10-entry input vector.

    Args:
        numeric: shape (6,) or (n, 6), the values of input1..input6.
        category: scalar or shape (n,), integer category 0..3.
        norm: scaling constants to divide by.

    Returns:
        Array of shape (10,) or (n, 10): six normalized numerics followed
        by a one-hot category block.

    Raises:
        RangeError: a numeric value exceeds its recorded maximum.
        DomainError: category outside 0..3 or non-integral.
    """
    arr = np.asarray(numeric, dtype=np.float64)
    single = arr.ndim == 1
    rows = np.atleast_2d(arr)
    if rows.shape[1] != N_NUMERIC_INPUTS:
        raise ConfigurationError(
            f"expected {N_NUMERIC_INPUTS} numeric inputs per row, got {rows.shape[1]}"
        )
    maxima = np.asarray(norm.input_max)
    over = rows > maxima
    if np.any(over):
        r, c = np.argwhere(over)[0]
        raise RangeError(
            f"{COLUMNS[c]} value {rows[r, c]!r} exceeds recorded maximum {maxima[c]!r}"
        )
    cat = _check_category(category)
    if cat.ndim == 0:
        cat = cat[None]
    if cat.shape[0] != rows.shape[0]:
        raise ConfigurationError("numeric rows and category entries must match in count")
    encoded = np.zeros((rows.shape[0], ENCODED_INPUT_SIZE))
    encoded[:, :N_NUMERIC_INPUTS] = rows / maxima
    encoded[np.arange(rows.shape[0]), N_NUMERIC_INPUTS + cat] = 1.0
    return encoded[0] if single else encoded


def encode_outputs(outputs: np.ndarray, norm: NormalizationSpec) -> np.ndarray:
    """Scale physical (signal, snr, output3) rows into normalized targets.

    The signal passes through log10 before scaling; all three entries land
    in [0, 1] on the data the spec was fitted from.
    """
    arr = np.asarray(outputs, dtype=np.float64)
    single = arr.ndim == 1
    rows = np.atleast_2d(arr)
    if rows.shape[1] != N_OUTPUTS:
        raise ConfigurationError(f"expected {N_OUTPUTS} outputs per row, got {rows.shape[1]}")
    if np.any(rows[:, 0] <= 0):
        raise DomainError("signal must be positive for the log transform")
    maxima = np.asarray(norm.output_max)
    if norm.signal_log_base == 10.0:
        log_signal = np.log10(rows[:, 0])
    else:
        log_signal = np.log(rows[:, 0]) / np.log(norm.signal_log_base)
    encoded = np.empty_like(rows)
    encoded[:, 0] = log_signal / maxima[0]
    encoded[:, 1] = rows[:, 1] / maxima[1]
    encoded[:, 2] = rows[:, 2] / maxima[2]
    return encoded[0] if single else encoded


def decode_outputs(encoded: np.ndarray, norm: NormalizationSpec) -> np.ndarray:
    """Invert encode_outputs back to physical units."""
    arr = np.asarray(encoded, dtype=np.float64)
    single = arr.ndim == 1
    rows = np.atleast_2d(arr)
    if rows.shape[1] != N_OUTPUTS:
        raise ConfigurationError(f"expected {N_OUTPUTS} outputs per row, got {rows.shape[1]}")
    maxima = np.asarray(norm.output_max)
    decoded = np.empty_like(rows)
    decoded[:, 0] = norm.signal_log_base ** (rows[:, 0] * maxima[0])
    decoded[:, 1] = rows[:, 1] * maxima[1]
    decoded[:, 2] = rows[:, 2] * maxima[2]
    return decoded[0] if single else decoded


def encode_table(table: SampleTable, norm: NormalizationSpec) -> tuple[np.ndarray, np.ndarray]:
    """Encode a whole table into (inputs, targets) arrays."""
    x = encode_inputs(table.values[:, :N_NUMERIC_INPUTS], table.column("category"), norm)
    y = encode_outputs(table.values[:, N_NUMERIC_INPUTS + 1 :], norm)
    return x, y


@dataclass(frozen=True, eq=False)
class SplitAssignment:
    """Row-to-partition assignment, a pure function of (seed, row count)."""

    seed: int
    fractions: tuple[float, float, float]
    labels: np.ndarray  # (n,) int8 of TRAIN / VALIDATION / TEST

    def indices(self, label: int) -> np.ndarray:
        """Ascending row indices assigned to `label`."""
        return np.nonzero(self.labels == label)[0]

    def counts(self) -> tuple[int, int, int]:
        return (
            int(np.sum(self.labels == TRAIN)),
            int(np.sum(self.labels == VALIDATION)),
            int(np.sum(self.labels == TEST)),
        )


def split(
    n_rows: int, seed: int, fractions: tuple[float, float, float] = DEFAULT_FRACTIONS
) -> SplitAssignment:
    """Shuffle row indices with `seed` and cut train/validation/test prefixes.

    Sizes are floor(f_train * n), floor(f_val * n) and the remainder, so the
    partition is exhaustive and disjoint.
    """
    if n_rows < 10:
        raise ConfigurationError(f"need at least 10 rows to split, got {n_rows}")
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ConfigurationError("fractions must be three positive numbers")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigurationError(f"fractions must sum to 1, got {sum(fractions)!r}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    perm = rng.permutation(n_rows)
    n_train = int(np.floor(fractions[0] * n_rows))
    n_val = int(np.floor(fractions[1] * n_rows))
    labels = np.empty(n_rows, dtype=np.int8)
    labels[perm[:n_train]] = TRAIN
    labels[perm[n_train : n_train + n_val]] = VALIDATION
    labels[perm[n_train + n_val :]] = TEST
    return SplitAssignment(seed=seed, fractions=tuple(fractions), labels=labels)


def write_csv(table: SampleTable, path) -> None:
    """Write `table` with the canonical header, 17 significant digits per field."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        np.savetxt(fh, table.values, fmt=_FLOAT_FMT, delimiter=",", newline="\n")


def read_csv(path) -> SampleTable:
    """Parse a sample CSV back into a table, losslessly.

    Raises:
        CsvParseError: wrong header, wrong column count or an unparseable
            field; the message carries the offending 1-based line number.
    """
    n_cols = len(COLUMNS)
    chunks: list[np.ndarray] = []
    buf = np.empty((65536, n_cols))
    filled = 0
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != COLUMNS:
            raise CsvParseError(
                f"line 1: expected header {','.join(COLUMNS)!r}", line_number=1
            )
        for line_no, record in enumerate(reader, start=2):
            if len(record) != n_cols:
                raise CsvParseError(
                    f"line {line_no}: expected {n_cols} fields, got {len(record)}",
                    line_number=line_no,
                )
            try:
                for j in range(n_cols):
                    buf[filled, j] = float(record[j])
            except ValueError:
                raise CsvParseError(
                    f"line {line_no}: unparseable numeric field", line_number=line_no
                ) from None
            filled += 1
            if filled == buf.shape[0]:
                chunks.append(buf.copy())
                filled = 0
    chunks.append(buf[:filled].copy())
    values = np.concatenate(chunks, axis=0) if len(chunks) > 1 else chunks[0]
    table = SampleTable(values)
    _validate_rows(table)
    return table


def _validate_rows(table: SampleTable) -> None:
    if len(table) == 0:
        return
    bad_signal = np.nonzero(table.column("signal") <= 0)[0]
    if bad_signal.size:
        raise CsvParseError(
            f"line {bad_signal[0] + 2}: signal must be positive",
            line_number=int(bad_signal[0]) + 2,
        )
    cat = table.column("category")
    bad_cat = np.nonzero((cat != np.rint(cat)) | (cat < 0) | (cat >= N_CATEGORIES))[0]
    if bad_cat.size:
        raise CsvParseError(
            f"line {bad_cat[0] + 2}: category must be an integer in 0..{N_CATEGORIES - 1}",
            line_number=int(bad_cat[0]) + 2,
        )
