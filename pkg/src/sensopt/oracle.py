"""Synthetic ground-truth sensor and factorial dataset generation.

Stands in for the physical device: a deterministic, seedable analytic
model mapping a settings combination (input1-input4, input6), a sweep
position (input5, 0-49) and a category (0-3) to the three recorded
outputs (signal, snr, output3).

Per settings combination s and category c the model is

    log10(signal) = level(s, c) + rate(s, c) * input5,        rate > 0
    snr           = (5 + dev(s)) * log10(signal)
                    - depth(s) * exp(-(log10(signal) - m)^2 / (2 w^2))
                    + optional Gaussian noise [dB]
    output3       = positive quadratic in the normalized settings

level, rate, dev and depth are smooth bounded fields of the normalized
settings, drawn once per seed, so every output is a pure function of
(seed, settings, input5, category). The SNR curve follows the ideal
5*log10(signal) trend to within 0.5 dB below 2e3 AU and dips by depth(s)
dB around the dip center, which must sit inside the 3e3-1e4 AU analysis
window; the constructor rejects parameter sets that would violate either
property.
"""

from __future__ import annotations

import hashlib
import itertools
import struct
from dataclasses import dataclass

import numpy as np

from .data import COLUMN_INDEX, SampleTable
from .errors import ConfigurationError, DomainError

INPUT5_COUNT = 50
CATEGORY_COUNT = 4
ROWS_PER_COMBINATION = INPUT5_COUNT * CATEGORY_COUNT

SETTING_NAMES = ("input1", "input2", "input3", "input4", "input6")

# Full range each settings input may assume (endpoints of the recorded grid).
SETTING_RANGES = (
    (418.0, 510.0),
    (112.0, 144.0),
    (400.0, 500.0),
    (2850.0, 3650.0),
    (3200.0, 4000.0),
)

# Analysis window (signal, AU) in which the SNR dip is expected.
DIP_WINDOW = (3.0e3, 1.0e4)

# Field amplitudes. rate stays strictly positive so the signal is monotone
# in input5, and level + 49 * rate always carries every curve through the
# dip window. dev is small enough that the low-signal trend invariant holds.
_LEVEL_BASE, _LEVEL_SPAN = 0.9, 0.35
_RATE_BASE, _RATE_SPAN = 0.0885, 0.0115
_SLOPE_DEV_SPAN = 0.02
_DEPTH_FLOOR, _DEPTH_SPAN = 0.55, 0.45
# Depth varies on a longer wavelength than the other fields so that a
# coarse training grid still resolves it.
_DEPTH_FREQ = 0.7
_CAT_LEVEL_STEP = 0.05
_CAT_RATE_SPAN = 0.02
_TREND_SLOPE = 5.0
_TREND_TOLERANCE_DB = 0.5
_FIT_SIGNAL_MAX = 2.0e3


@dataclass(frozen=True)
class GridSpec:
    """Recorded values per settings input; input5 and category are implied.

    Lists must be sorted ascending. Repeated entries are kept verbatim, so
    the combination count is the raw product of list lengths.
    """

    input1: tuple[float, ...]
    input2: tuple[float, ...]
    input3: tuple[float, ...]
    input4: tuple[float, ...]
    input6: tuple[float, ...]

    def __post_init__(self):
        for name, vals in zip(SETTING_NAMES, self.values()):
            if len(vals) == 0:
                raise ConfigurationError(f"{name} must list at least one value")
            if any(a > b for a, b in zip(vals, vals[1:])):
                raise ConfigurationError(f"{name} values must be sorted ascending")

    def values(self) -> tuple[tuple[float, ...], ...]:
        return (self.input1, self.input2, self.input3, self.input4, self.input6)

    @property
    def combination_count(self) -> int:
        n = 1
        for vals in self.values():
            n *= len(vals)
        return n

    def subsample(self, values_per_input: int) -> "GridSpec":
        """Keep `values_per_input` entries per input, endpoints included."""
        if values_per_input < 1:
            raise ConfigurationError("values_per_input must be at least 1")
        picked = []
        for vals in self.values():
            if values_per_input >= len(vals):
                picked.append(vals)
                continue
            idx = np.round(np.linspace(0, len(vals) - 1, values_per_input)).astype(int)
            picked.append(tuple(vals[i] for i in idx))
        return GridSpec(*picked)


TABLE1 = GridSpec(
    input1=(418.0, 441.0, 464.0, 478.0, 510.0),
    input2=(112.0, 120.0, 128.0, 136.0, 144.0),
    input3=(400.0, 425.0, 450.0, 475.0, 500.0),
    input4=(2850.0, 3050.0, 3250.0, 3450.0, 3650.0),
    # The repeated 3600 is part of the recorded grid and is kept verbatim.
    input6=(3200.0, 3400.0, 3600.0, 3600.0, 4000.0),
)


def enumerate_grid(spec: GridSpec) -> list[tuple[float, ...]]:
    """All settings combinations of `spec` in lexicographic order."""
    return list(itertools.product(*spec.values()))


def _normalize_settings(settings) -> np.ndarray:
    arr = np.asarray(settings, dtype=np.float64)
    single = arr.ndim == 1
    rows = np.atleast_2d(arr)
    if rows.shape[1] != len(SETTING_NAMES):
        raise ConfigurationError(
            f"a settings combination has {len(SETTING_NAMES)} entries, got {rows.shape[1]}"
        )
    lo = np.array([r[0] for r in SETTING_RANGES])
    hi = np.array([r[1] for r in SETTING_RANGES])
    u = (rows - lo) / (hi - lo)
    return u[0] if single else u


class SensorOracle:
    """Deterministic analytic sensor model.

    Args:
        seed: fixes every coefficient field; identical seeds are
            guaranteed to reproduce identical outputs bit for bit.
        dip_center: signal position (AU) of the SNR dip; must lie inside
            the 3e3-1e4 AU analysis window.
        dip_depth: dip depth scale in dB; per-combination depths span
            roughly [0.1, 1.0] times this value.
        dip_width: dip width in log10(signal) units.
        noise_db: standard deviation of optional Gaussian SNR noise (dB);
            0 disables the noise path entirely.
    """

    def __init__(
        self,
        seed: int = 0,
        dip_center: float = 5.5e3,
        dip_depth: float = 5.0,
        dip_width: float = 0.12,
        noise_db: float = 0.0,
    ):
        if not DIP_WINDOW[0] <= dip_center <= DIP_WINDOW[1]:
            raise ConfigurationError(
                f"dip_center {dip_center!r} outside analysis window {DIP_WINDOW}"
            )
        if dip_width <= 0:
            raise ConfigurationError("dip_width must be positive")
        if dip_depth < 0:
            raise ConfigurationError("dip_depth must be nonnegative")
        if noise_db < 0:
            raise ConfigurationError("noise_db must be nonnegative")
        log_fit_max = np.log10(_FIT_SIGNAL_MAX)
        tail = dip_depth * np.exp(
            -0.5 * ((np.log10(dip_center) - log_fit_max) / dip_width) ** 2
        )
        if _SLOPE_DEV_SPAN * log_fit_max + tail >= _TREND_TOLERANCE_DB:
            raise ConfigurationError(
                "dip too deep or too wide: SNR below 2e3 AU would deviate from the "
                f"5*log10 trend by {_SLOPE_DEV_SPAN * log_fit_max + tail:.3f} dB or more"
            )
        self.seed = int(seed)
        self.dip_center = float(dip_center)
        self.dip_depth = float(dip_depth)
        self.dip_width = float(dip_width)
        self.noise_db = float(noise_db)
        self._log_center = float(np.log10(dip_center))

        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed)))
        self._w_level = rng.uniform(-1.0, 1.0, 5)
        self._p_level = rng.uniform(0.0, 2.0 * np.pi)
        self._w_rate = rng.uniform(-1.0, 1.0, 5)
        self._p_rate = rng.uniform(0.0, 2.0 * np.pi)
        self._w_dev = rng.uniform(-1.0, 1.0, 5)
        self._p_dev = rng.uniform(0.0, 2.0 * np.pi)
        self._w_depth = _DEPTH_FREQ * rng.uniform(-1.0, 1.0, 5)
        self._p_depth = rng.uniform(0.0, 2.0 * np.pi)
        self._out3_center = rng.uniform(0.2, 0.8, 5)
        self._out3_quad = rng.uniform(0.5, 1.5, 5)
        self._out3_lin = rng.uniform(-0.3, 0.3, 5)

    # -- coefficient fields ------------------------------------------------

    @staticmethod
    def _field(u: np.ndarray, weights: np.ndarray, phase: float) -> np.ndarray:
        # Smooth, bounded in [-1, 1], non-constant for generic weights.
        return np.cos(np.pi * (u @ weights) + phase)

    def _level(self, u: np.ndarray) -> np.ndarray:
        return _LEVEL_BASE + _LEVEL_SPAN * self._field(u, self._w_level, self._p_level)

    def _rate(self, u: np.ndarray) -> np.ndarray:
        return _RATE_BASE + _RATE_SPAN * self._field(u, self._w_rate, self._p_rate)

    def _slope_dev(self, u: np.ndarray) -> np.ndarray:
        return _SLOPE_DEV_SPAN * self._field(u, self._w_dev, self._p_dev)

    def _depth(self, u: np.ndarray) -> np.ndarray:
        return self.dip_depth * (
            _DEPTH_FLOOR + _DEPTH_SPAN * self._field(u, self._w_depth, self._p_depth)
        )

    def _output3(self, u: np.ndarray) -> np.ndarray:
        quad = ((u - self._out3_center) ** 2) @ self._out3_quad
        lin = (u - 0.5) @ self._out3_lin
        return 0.8 + quad + lin

    # -- public queries ----------------------------------------------------

    def dip_depth_at(self, settings) -> float | np.ndarray:
        """True dip depth (dB) for one combination or an (n, 5) batch."""
        u = _normalize_settings(settings)
        out = self._depth(np.atleast_2d(u))
        return float(out[0]) if u.ndim == 1 else out

    def output3_at(self, settings) -> float | np.ndarray:
        u = _normalize_settings(settings)
        out = self._output3(np.atleast_2d(u))
        return float(out[0]) if u.ndim == 1 else out

    def signal_at(self, settings, input5, category) -> float:
        return self.simulate(settings, input5, category)[0]

    def snr_at(self, settings, signal) -> float | np.ndarray:
        """Noise-free SNR (dB) of the combination's curve at a signal level."""
        sig = np.asarray(signal, dtype=np.float64)
        if np.any(sig <= 0):
            raise DomainError("signal must be positive")
        u = np.atleast_2d(_normalize_settings(settings))
        log_sig = np.log10(sig)
        dip = self._depth(u)[0] * np.exp(
            -0.5 * ((log_sig - self._log_center) / self.dip_width) ** 2
        )
        snr = (_TREND_SLOPE + self._slope_dev(u)[0]) * log_sig - dip
        return float(snr) if sig.ndim == 0 else snr

    # -- simulation --------------------------------------------------------

    def _block_noise(self, settings) -> np.ndarray:
        packed = struct.pack("<5d", *(float(v) for v in settings))
        digest = hashlib.blake2b(packed, digest_size=8).digest()
        key = np.array(
            [self.seed % 2**64, int.from_bytes(digest, "little")], dtype=np.uint64
        )
        gen = np.random.Generator(np.random.Philox(key=key))
        return gen.standard_normal(ROWS_PER_COMBINATION)

    def simulate_block(self, settings) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All 200 rows of one combination: input5-major, category-minor.

        Returns:
            (signal, snr, output3) arrays of length 200, where row
            input5 * 4 + category corresponds to that sweep position.
        """
        u = np.atleast_2d(_normalize_settings(settings))
        level = self._level(u)[0]
        rate = self._rate(u)[0]
        dev = self._slope_dev(u)[0]
        depth = self._depth(u)[0]
        out3 = self._output3(u)[0]

        input5 = np.repeat(np.arange(INPUT5_COUNT, dtype=np.float64), CATEGORY_COUNT)
        category = np.tile(np.arange(CATEGORY_COUNT, dtype=np.float64), INPUT5_COUNT)
        cat_frac = category / (CATEGORY_COUNT - 1)
        log_sig = (level + _CAT_LEVEL_STEP * cat_frac) + rate * (
            1.0 + _CAT_RATE_SPAN * (cat_frac - 0.5)
        ) * input5
        signal = 10.0**log_sig
        dip = depth * np.exp(-0.5 * ((log_sig - self._log_center) / self.dip_width) ** 2)
        snr = (_TREND_SLOPE + dev) * log_sig - dip
        if self.noise_db > 0:
            snr = snr + self.noise_db * self._block_noise(settings)
        return signal, snr, np.full(ROWS_PER_COMBINATION, out3)

    def simulate(self, settings, input5, category) -> tuple[float, float, float]:
        """Outputs (signal, snr, output3) of one observation row.

        Raises:
            DomainError: input5 outside 0..49 or category outside 0..3.
        """
        i5 = float(input5)
        cat = float(category)
        if not (0 <= i5 < INPUT5_COUNT and i5 == int(i5)):
            raise DomainError(f"input5 must be an integer in 0..{INPUT5_COUNT - 1}")
        if not (0 <= cat < CATEGORY_COUNT and cat == int(cat)):
            raise DomainError(f"category must be an integer in 0..{CATEGORY_COUNT - 1}")
        signal, snr, out3 = self.simulate_block(settings)
        row = int(i5) * CATEGORY_COUNT + int(cat)
        return float(signal[row]), float(snr[row]), float(out3[row])

    # -- persistence -------------------------------------------------------

    def to_config(self) -> dict:
        """Key-value form from which an identical oracle can be rebuilt."""
        return {
            "seed": self.seed,
            "dip_center": self.dip_center,
            "dip_depth": self.dip_depth,
            "dip_width": self.dip_width,
            "noise_db": self.noise_db,
        }

    @classmethod
    def from_config(cls, config: dict) -> "SensorOracle":
        known = {"seed", "dip_center", "dip_depth", "dip_width", "noise_db"}
        unknown = set(config) - known
        if unknown:
            raise ConfigurationError(f"unknown oracle config keys: {sorted(unknown)}")
        return cls(**config)


def generate_dataset(oracle: SensorOracle, spec: GridSpec) -> SampleTable:
    """Simulate every (combination, input5, category) row of the grid.

    Row order is combination-major (lexicographic), then input5, then
    category, so regeneration with the same oracle and spec is
    byte-identical.
    """
    combos = enumerate_grid(spec)
    n = len(combos) * ROWS_PER_COMBINATION
    values = np.empty((n, len(COLUMN_INDEX)))
    input5 = np.repeat(np.arange(INPUT5_COUNT, dtype=np.float64), CATEGORY_COUNT)
    category = np.tile(np.arange(CATEGORY_COUNT, dtype=np.float64), INPUT5_COUNT)
    for i, combo in enumerate(combos):
        signal, snr, out3 = oracle.simulate_block(combo)
        block = values[i * ROWS_PER_COMBINATION : (i + 1) * ROWS_PER_COMBINATION]
        block[:, 0:4] = combo[0:4]
        block[:, 4] = input5
        block[:, 5] = combo[4]
        block[:, 6] = category
        block[:, 7] = signal
        block[:, 8] = snr
        block[:, 9] = out3
    return SampleTable(values)
