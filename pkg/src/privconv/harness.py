"""Monte Carlo MSE estimation and experiment sweeps.

The measured quantity is the mean squared error per coordinate,
(1/N) E ||output - h * x||_2^2, estimated over independent trials.  All
implemented mechanisms add input-independent noise, so a fixed x (zero
by default) realizes the supremum over inputs; a random-x strategy is
available to cross-check that independence.

Trial t of a run uses seed.substream(t), so estimates are reproducible
and rows of an experiment table are byte-identical across runs with the
same config.  Aggregation is a sequential reduction in trial order to
keep floating-point sums deterministic.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bounds import optimality_ratio, spec_lb
from .mechanisms import (
    MECHANISM_NAMES,
    PrivacyParams,
    sample_outputs,
)
from .noise import Seed, uniform_vector
from .transforms import Cyclic, RealSequence, Spectrum, _fwht, convolve_direct, idft

__all__ = [
    "ExperimentConfig",
    "MseEstimate",
    "RunningSumResult",
    "CSV_COLUMNS",
    "FILTER_FAMILIES",
    "impulse_filter",
    "constant_filter",
    "running_sum_filter",
    "compressible_filter",
    "compressible_cube_filter",
    "random_sign_filter",
    "make_filter",
    "make_input",
    "estimate_mse",
    "running_sum_experiment",
    "mechanism_comparison",
    "write_rows_csv",
    "rows_to_json",
]

FILTER_FAMILIES = ("impulse", "constant", "running-sum", "compressible:c,p", "random-sign")

CSV_COLUMNS = (
    "mechanism",
    "filter",
    "N",
    "epsilon",
    "delta",
    "trials",
    "theoretical_mse",
    "empirical_mse",
    "std_error",
    "spec_lb",
    "optimality_ratio",
)


def impulse_filter(n: int) -> RealSequence:
    """The identity filter e_0; its Fourier magnitudes are flat 1/sqrt(N)."""
    values = np.zeros(_checked_size(n))
    values[0] = 1.0
    return RealSequence.cyclic(values)


def constant_filter(n: int) -> RealSequence:
    """All-ones filter; the spectrum is the single coefficient sqrt(N) at zero."""
    return RealSequence.cyclic(np.ones(_checked_size(n)))


def running_sum_filter(n: int) -> RealSequence:
    """n/2 ones then n/2 zeros: prefix sums of a half-length input, via padding.

    Convolving with (x, 0, ..., 0) puts the k-th running sum of x at
    output index k.  Every even nonzero Fourier index of this filter
    vanishes (geometric sum over a half period).
    """
    n = _checked_size(n)
    if n % 2:
        raise ValueError("running-sum filter needs even length (half ones, half zeros)")
    values = np.zeros(n)
    values[: n // 2] = 1.0
    return RealSequence.cyclic(values)


def compressible_filter(n: int, c: float, p: float) -> RealSequence:
    """A real filter whose sorted squared Fourier magnitudes track c/(i+1)^p.

    Conjugate symmetry forces paired magnitudes, so the construction
    puts sqrt(c) at frequency 0, sqrt(c)/(2j+1)^(p/2) at the pair
    (j, n-j), and sqrt(c)/n^(p/2) at n/2; every sorted rank then sits on
    or below the decay envelope, with equality at even ranks.
    """
    n = _checked_size(n)
    if n % 2 or n < 4:
        raise ValueError("compressible filter construction needs even length >= 4")
    if c <= 0 or p <= 1:
        raise ValueError("need c > 0 and p > 1")
    root = math.sqrt(c)
    coeffs = np.empty(n)
    coeffs[0] = root
    j = np.arange(1, n // 2)
    coeffs[j] = root / (2.0 * j + 1.0) ** (p / 2.0)
    coeffs[n - j] = coeffs[j]
    coeffs[n // 2] = root / float(n) ** (p / 2.0)
    # real even spectrum -> real filter
    return idft(Spectrum(coeffs.astype(np.complex128), Cyclic(n)))


def compressible_cube_filter(d: int, c: float, p: float) -> RealSequence:
    """Cube filter meeting |h_hat|_(i)^2 = c/(i+1)^p with equality at every rank.

    The Walsh spectrum is real and unconstrained by conjugate symmetry,
    so the decay envelope itself is a valid spectrum.
    """
    if d < 0:
        raise ValueError("d must be nonnegative")
    if c <= 0 or p <= 1:
        raise ValueError("need c > 0 and p > 1")
    n = 2**d
    coeffs = math.sqrt(c) / np.arange(1, n + 1, dtype=np.float64) ** (p / 2.0)
    return RealSequence.cube(_fwht(coeffs) / np.sqrt(n))


def random_sign_filter(n: int, seed: Seed) -> RealSequence:
    """Uniform +-1 entries, deterministic in the seed."""
    u = uniform_vector(seed, _checked_size(n), lane=7)
    return RealSequence.cyclic(np.where(u < 0.5, -1.0, 1.0))


def _checked_size(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError("filter length must be a positive integer")
    return int(n)


def make_filter(family: str, n: int, seed: Seed) -> RealSequence:
    """Build a named filter family; 'compressible:c,p' carries its parameters."""
    if family == "impulse":
        return impulse_filter(n)
    if family == "constant":
        return constant_filter(n)
    if family == "running-sum":
        return running_sum_filter(n)
    if family == "random-sign":
        return random_sign_filter(n, seed)
    if family.startswith("compressible:"):
        params = family.split(":", 1)[1].split(",")
        if len(params) != 2:
            raise ValueError("compressible filter takes two parameters: compressible:c,p")
        return compressible_filter(n, float(params[0]), float(params[1]))
    raise ValueError(f"unknown filter family {family!r}; expected one of {FILTER_FAMILIES}")


def make_input(strategy: str, group, seed: Seed) -> RealSequence:
    """The x used for MSE estimation: zeros, or uniform [-1, 1) for cross-checks."""
    if strategy == "zero":
        return RealSequence(np.zeros(group.n), group)
    if strategy == "random":
        return RealSequence(2.0 * uniform_vector(seed, group.n, lane=23) - 1.0, group)
    raise ValueError(f"unknown input strategy {strategy!r}; expected 'zero' or 'random'")


@dataclass(frozen=True)
class ExperimentConfig:
    """A reproducible sweep: mechanisms x filter families x sizes."""

    mechanisms: tuple
    filters: tuple
    sizes: tuple
    privacy: PrivacyParams
    trials: int
    seed: Seed
    worst_case_inputs: str = "zero"

    def __post_init__(self):
        mechanisms = tuple(self.mechanisms)
        filters = tuple(self.filters)
        sizes = tuple(int(s) for s in self.sizes)
        if not mechanisms:
            raise ValueError("config needs at least one mechanism")
        for m in mechanisms:
            if m not in MECHANISM_NAMES:
                raise ValueError(f"unknown mechanism {m!r}; expected one of {MECHANISM_NAMES}")
        if not filters:
            raise ValueError("config needs at least one filter family")
        if not sizes or any(s < 1 for s in sizes):
            raise ValueError("sizes must be a nonempty list of positive integers")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.worst_case_inputs not in ("zero", "random"):
            raise ValueError("worst_case_inputs must be 'zero' or 'random'")
        object.__setattr__(self, "mechanisms", mechanisms)
        object.__setattr__(self, "filters", filters)
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def from_json_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            privacy = PrivacyParams(float(data["epsilon"]), float(data["delta"]))
            seed_obj = data.get("seed", 0)
            if isinstance(seed_obj, dict):
                seed = Seed(int(seed_obj.get("base", 0)), int(seed_obj.get("stream", 0)))
            else:
                seed = Seed(int(seed_obj))
            return cls(
                mechanisms=tuple(data["mechanisms"]),
                filters=tuple(data["filters"]),
                sizes=tuple(data["sizes"]),
                privacy=privacy,
                trials=int(data["trials"]),
                seed=seed,
                worst_case_inputs=str(data.get("worst_case_inputs", "zero")),
            )
        except KeyError as missing:
            raise ValueError(f"config is missing required field {missing.args[0]!r}") from None

    def to_json_dict(self) -> dict:
        return {
            "mechanisms": list(self.mechanisms),
            "filters": list(self.filters),
            "sizes": list(self.sizes),
            "epsilon": self.privacy.epsilon,
            "delta": self.privacy.delta,
            "trials": self.trials,
            "seed": {"base": self.seed.base, "stream": self.seed.stream},
            "worst_case_inputs": self.worst_case_inputs,
        }


@dataclass(frozen=True)
class MseEstimate:
    empirical_mse: float
    std_error: float
    theoretical_mse: float
    trials: int

    def __post_init__(self):
        if self.empirical_mse < 0 or self.std_error < 0:
            raise ValueError("MSE and standard error must be nonnegative")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


def estimate_mse(
    config: ExperimentConfig,
    mechanism: str,
    h: RealSequence,
    x: Optional[RealSequence] = None,
    plan=None,
) -> MseEstimate:
    """Average per-coordinate squared error against the exact convolution.

    Trial t is the mechanism run with config.seed.substream(t); the
    per-trial errors (1/N)||output_t - h * x||^2 are averaged in trial
    order, and the standard error comes from their sample variance.
    """
    if x is None:
        x = make_input(config.worst_case_inputs, h.group, config.seed)
    exact = convolve_direct(h, x).values
    outputs, theoretical, _ = sample_outputs(
        mechanism, x, h, config.privacy, config.seed, config.trials, plan=plan
    )
    per_trial = np.mean((outputs - exact[None, :]) ** 2, axis=1)
    empirical = float(per_trial.mean())
    if config.trials > 1:
        std_error = float(per_trial.std(ddof=1) / math.sqrt(config.trials))
    else:
        std_error = 0.0
    return MseEstimate(empirical, std_error, theoretical, config.trials)


@dataclass(frozen=True)
class RunningSumResult:
    """Fourier-mechanism MSE of padded running-sum instances versus N."""

    rows: tuple
    loglog_slope: float
    mse_ratio: float
    ratio_cap: float


def running_sum_experiment(
    n_values: Sequence[int], privacy: PrivacyParams, trials: int, seed: Seed
) -> RunningSumResult:
    """Measure how running-sum MSE grows with the input length N.

    Each instance convolves the length-2N filter (N ones, N zeros) with
    a zero-padded input, so output k holds the k-th running sum.  The
    result reports a log-log slope of empirical MSE against N and the
    max/min MSE ratio with its polylog cap (log 2N_max / log 2N_min)^3;
    the l1 Fourier norm of the filter grows like sqrt(N) log N, so the
    MSE should grow only polylogarithmically.
    """
    sizes = sorted(int(n) for n in n_values)
    if not sizes:
        raise ValueError("n_values must be nonempty")
    for n in sizes:
        if n < 2 or n & (n - 1):
            raise ValueError(f"running-sum sizes must be powers of two >= 2, got {n}")
    rows = []
    for index, n in enumerate(sizes):
        h = running_sum_filter(2 * n)
        config = ExperimentConfig(
            mechanisms=("fourier",),
            filters=("running-sum",),
            sizes=(2 * n,),
            privacy=privacy,
            trials=trials,
            seed=seed.substream(index << 32),
        )
        est = estimate_mse(config, "fourier", h)
        rows.append(
            {
                "N": n,
                "padded_length": 2 * n,
                "theoretical_mse": est.theoretical_mse,
                "empirical_mse": est.empirical_mse,
                "std_error": est.std_error,
                "trials": est.trials,
            }
        )
    if len(rows) > 1:
        logs_n = np.log2([row["N"] for row in rows])
        logs_mse = np.log2([row["empirical_mse"] for row in rows])
        slope = float(np.polyfit(logs_n, logs_mse, 1)[0])
        ratio = rows[-1]["empirical_mse"] / rows[0]["empirical_mse"]
    else:
        slope = 0.0
        ratio = 1.0
    cap = (math.log2(2 * sizes[-1]) / math.log2(2 * sizes[0])) ** 3
    return RunningSumResult(tuple(rows), slope, ratio, cap)


def mechanism_comparison(config: ExperimentConfig) -> list:
    """One row per (mechanism, filter family, N), CSV-schema keyed.

    Each cell runs its trials on a distinct seed substream.  For
    compressible families with p > 2 the per-coefficient mechanism must
    beat input perturbation by at least N / log^2 N theoretically; the
    sweep enforces that relation whenever both mechanisms are present.
    """
    rows = []
    cell = 0
    for n in config.sizes:
        for family in config.filters:
            h = make_filter(family, n, config.seed)
            lb = spec_lb(h)
            ratio = optimality_ratio(h, config.privacy)
            x = make_input(config.worst_case_inputs, h.group, config.seed)
            theory = {}
            for mechanism in config.mechanisms:
                cell += 1
                cell_config = ExperimentConfig(
                    mechanisms=(mechanism,),
                    filters=(family,),
                    sizes=(n,),
                    privacy=config.privacy,
                    trials=config.trials,
                    seed=config.seed.substream(cell << 32),
                    worst_case_inputs=config.worst_case_inputs,
                )
                est = estimate_mse(cell_config, mechanism, h, x)
                theory[mechanism] = est.theoretical_mse
                rows.append(
                    {
                        "mechanism": mechanism,
                        "filter": family,
                        "N": n,
                        "epsilon": config.privacy.epsilon,
                        "delta": config.privacy.delta,
                        "trials": est.trials,
                        "theoretical_mse": est.theoretical_mse,
                        "empirical_mse": est.empirical_mse,
                        "std_error": est.std_error,
                        "spec_lb": lb,
                        "optimality_ratio": ratio,
                    }
                )
            if family.startswith("compressible:") and "fourier" in theory and "input-perturb" in theory:
                p = float(family.split(",")[1])
                if p > 2 and n >= 4:
                    cap = theory["input-perturb"] * math.log2(n) ** 2 / n
                    if theory["fourier"] > cap:
                        raise ValueError(
                            f"compressible p={p} at N={n}: per-coefficient MSE "
                            f"{theory['fourier']:.6g} exceeds the decay cap {cap:.6g}"
                        )
    return rows


def write_rows_csv(rows: Sequence[dict], stream) -> None:
    """Write the comparison table; float fields use repr so reruns are byte-identical."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_csv_cell(row[col]) for col in CSV_COLUMNS])


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_json(rows: Sequence[dict]) -> str:
    return json.dumps(list(rows), indent=2)
