"""Command-line front end.

Subcommands: transform, convolve, privatize, bounds, marginals, bench.
All randomness flows from --seed, so identical argv plus identical
input files produce identical output bytes.  Exit codes: 0 success,
1 validation or usage error, 2 file IO error; every failure prints one
line starting with "error:" to stderr.

Sequence files hold either a JSON array of numbers, newline-delimited
decimal floats (both read as cyclic sequences), or a JSON object
{"values": [...], "group": "cyclic"|"cube", "n": N | "d": d}.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .bounds import harmonic_bound_check, optimality_ratio, spec_lb, theoretical_mse
from .harness import (
    ExperimentConfig,
    FILTER_FAMILIES,
    make_filter,
    mechanism_comparison,
    rows_to_json,
    running_sum_experiment,
    write_rows_csv,
)
from .marginals import WDnf, CubeHistogram, marginal_query, private_marginals, spectral_tail
from .mechanisms import MECHANISM_NAMES, PrivacyParams, _single
from .noise import Seed
from .transforms import Cyclic, RealSequence, convolve_fast, dft, wht

__all__ = ["main", "load_sequence", "load_histogram", "load_wdnf"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit; surface a catchable error instead
        raise _UsageError(message)


def _load_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _parse_sequence_text(text: str, origin: str):
    stripped = text.strip()
    if not stripped:
        raise ValueError(f"{origin}: empty input")
    if stripped[0] in "[{":
        return json.loads(stripped)
    try:
        return [float(line) for line in stripped.splitlines() if line.strip()]
    except ValueError:
        raise ValueError(f"{origin}: expected JSON or newline-delimited floats") from None


def load_sequence(path: str) -> RealSequence:
    """Read a sequence file; bare arrays and float lines default to cyclic."""
    data = _parse_sequence_text(_load_text(path), path)
    if isinstance(data, dict):
        if "values" not in data:
            raise ValueError(f'{path}: sequence object needs a "values" field')
        values = np.asarray(data["values"], dtype=np.float64)
        group = data.get("group", "cyclic")
        if group == "cyclic":
            if "n" in data and int(data["n"]) != values.size:
                raise ValueError(f'{path}: "n" = {data["n"]} does not match {values.size} values')
            return RealSequence.cyclic(values)
        if group == "cube":
            if "d" in data:
                d = int(data["d"])
                if values.size != 2**d:
                    raise ValueError(f'{path}: "d" = {d} needs 2^{d} values, got {values.size}')
            elif values.size < 1 or values.size & (values.size - 1):
                raise ValueError(f"{path}: cube sequence length must be a power of two")
            return RealSequence.cube(values)
        raise ValueError(f'{path}: unknown group {group!r}; expected "cyclic" or "cube"')
    return RealSequence.cyclic(np.asarray(data, dtype=np.float64))


def load_wdnf(path: str) -> WDnf:
    data = json.loads(_load_text(path))
    return WDnf.from_json_dict(data)


def load_histogram(path: str, d=None) -> CubeHistogram:
    """Read a histogram: dense array, (bitstring, count) pairs, or an object."""
    data = json.loads(_load_text(path))
    if isinstance(data, dict):
        d = int(data["d"]) if "d" in data else d
        if "counts" in data:
            data = data["counts"]
        elif "pairs" in data:
            data = data["pairs"]
        else:
            raise ValueError(f'{path}: histogram object needs "counts" or "pairs"')
    if not isinstance(data, list) or not data:
        raise ValueError(f"{path}: histogram must be a nonempty list")
    if isinstance(data[0], (int, float)):
        if d is None:
            size = len(data)
            if size < 1 or size & (size - 1):
                raise ValueError(f"{path}: dense histogram length must be a power of two (or pass --d)")
            d = size.bit_length() - 1
        return CubeHistogram.from_dense(data, int(d))
    pairs = [(str(bits), float(count)) for bits, count in data]
    if d is None:
        d = len(pairs[0][0])
    return CubeHistogram.from_pairs(pairs, int(d))


def _emit(text: str, path) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_privacy_args(parser: argparse.ArgumentParser, required: bool) -> None:
    parser.add_argument("--epsilon", type=float, required=required, help="privacy parameter epsilon")
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument("--delta", type=float, help="privacy parameter delta in (0, 1)")
    group.add_argument(
        "--ln-inv-delta", type=float, dest="ln_inv_delta", help="pass ln(1/delta) instead of delta"
    )


def _privacy_from(args, default=False) -> PrivacyParams:
    epsilon = args.epsilon
    if epsilon is None:
        if not default:
            raise ValueError("--epsilon is required")
        epsilon = 1.0
    if args.ln_inv_delta is not None:
        return PrivacyParams.from_ln_inv_delta(epsilon, args.ln_inv_delta)
    if args.delta is not None:
        return PrivacyParams(epsilon, args.delta)
    if not default:
        raise ValueError("provide --delta or --ln-inv-delta")
    return PrivacyParams.from_ln_inv_delta(epsilon, 1.0)


def _add_filter_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--h", metavar="FILE", help="filter sequence file")
    parser.add_argument(
        "--filter",
        metavar="FAMILY",
        help=f"generate the filter instead of reading --h; one of {', '.join(FILTER_FAMILIES)}",
    )
    parser.add_argument("--n", type=int, help="length for generated filters")


def _resolve_filter(args) -> RealSequence:
    if (args.h is None) == (args.filter is None):
        raise ValueError("provide exactly one of --h FILE or --filter FAMILY")
    if args.h is not None:
        return load_sequence(args.h)
    if args.n is None:
        raise ValueError("--filter needs --n LENGTH")
    return make_filter(args.filter, args.n, Seed(args.seed))


def _cmd_transform(args) -> None:
    seq = load_sequence(args.x)
    if isinstance(seq.group, Cyclic):
        spectrum = dft(seq)
        payload = {
            "group": "cyclic",
            "n": seq.group.n,
            "normalization": spectrum.normalization,
            "real": spectrum.coeffs.real.tolist(),
            "imag": spectrum.coeffs.imag.tolist(),
        }
    else:
        spectrum = wht(seq)
        payload = {
            "group": "cube",
            "d": seq.group.d,
            "normalization": spectrum.normalization,
            "coeffs": spectrum.coeffs.tolist(),
        }
    _emit(json.dumps(payload), args.out)


def _cmd_convolve(args) -> None:
    h = _resolve_filter(args)
    x = load_sequence(args.x)
    y = convolve_fast(h, x)
    if args.format == "csv":
        lines = ["index,value"] + [f"{i},{v!r}" for i, v in enumerate(y.values.tolist())]
        _emit("\n".join(lines), args.out)
    else:
        _emit(json.dumps({"n": len(y), "values": y.values.tolist()}), args.out)


def _cmd_privatize(args) -> None:
    h = _resolve_filter(args)
    if args.x is not None:
        x = load_sequence(args.x)
    else:
        x = RealSequence(np.zeros(h.group.n), h.group)
    privacy = _privacy_from(args)
    result = _single(args.mechanism, x, h, privacy, Seed(args.seed), neighbor_p=args.neighbor_p)
    _emit(json.dumps(result.to_json_dict()), args.out)


def _cmd_bounds(args) -> None:
    h = _resolve_filter(args)
    privacy = _privacy_from(args, default=True)
    report = harmonic_bound_check(h)
    mse = {}
    for name in MECHANISM_NAMES:
        try:
            mse[name] = theoretical_mse(name, h, privacy)
        except ValueError:
            mse[name] = None  # mechanism undefined for this group/length
    payload = {
        "n": h.group.n,
        "epsilon": privacy.epsilon,
        "delta": privacy.delta,
        "spec_lb": spec_lb(h),
        "l1_fourier_norm": report.l1_fourier,
        "support_size": report.support_size,
        "harmonic_lhs": report.l1_fourier,
        "harmonic_rhs": report.bound,
        "harmonic_ratio": report.ratio,
        "harmonic_holds": report.holds,
        "optimality_ratio": optimality_ratio(h, privacy),
        "theoretical_mse": mse,
    }
    if args.format == "csv":
        flat = {k: v for k, v in payload.items() if k != "theoretical_mse"}
        for name, value in mse.items():
            flat[f"theoretical_mse.{name}"] = value
        lines = [",".join(flat.keys()), ",".join(_csv_value(v) for v in flat.values())]
        _emit("\n".join(lines), args.out)
    else:
        _emit(json.dumps(payload), args.out)


def _csv_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _cmd_marginals(args) -> None:
    if (args.wdnf is None) == (args.attrs is None):
        raise ValueError("provide exactly one of --wdnf FILE or --attrs LIST")
    if args.wdnf is not None:
        formula = load_wdnf(args.wdnf)
    else:
        if args.d is None:
            raise ValueError("--attrs needs --d DIMENSIONS")
        attrs = [int(a) for a in args.attrs.split(",") if a.strip()]
        formula = marginal_query(attrs, args.d)
    if args.tail is not None:
        payload = {
            "d": formula.d,
            "width": formula.width,
            "k": args.tail,
            "spectral_tail": spectral_tail(formula, args.tail),
        }
        _emit(json.dumps(payload), args.out)
        return
    if args.data is None:
        raise ValueError("provide --data HISTOGRAM (or --tail K for spectrum analysis)")
    histogram = load_histogram(args.data, args.d)
    privacy = _privacy_from(args)
    result = private_marginals(histogram, formula, privacy, Seed(args.seed))
    _emit(json.dumps(result.to_json_dict()), args.out)


def _running_sum_rows_csv(rows) -> str:
    columns = ("N", "padded_length", "theoretical_mse", "empirical_mse", "std_error", "trials")
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_csv_value(row[c]) for c in columns))
    return "\n".join(lines)


def _cmd_bench(args) -> None:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = ExperimentConfig.from_json_dict(json.load(fh))
    if args.trials is not None or args.worst_case_search:
        data = config.to_json_dict()
        if args.trials is not None:
            data["trials"] = args.trials
        if args.worst_case_search:
            data["worst_case_inputs"] = "random"
        config = ExperimentConfig.from_json_dict(data)
    if args.experiment == "running-sum":
        result = running_sum_experiment(config.sizes, config.privacy, config.trials, config.seed)
        rows = [dict(row) for row in result.rows]
        if args.format == "csv":
            _emit(_running_sum_rows_csv(rows), args.out)
        else:
            payload = {
                "rows": rows,
                "loglog_slope": result.loglog_slope,
                "mse_ratio": result.mse_ratio,
                "ratio_cap": result.ratio_cap,
            }
            _emit(json.dumps(payload, indent=2), args.out)
        if args.plot:
            from . import plotting

            for path in plotting.render_running_sum(rows, args.plot):
                sys.stderr.write(f"plot: {path}\n")
        return
    rows = mechanism_comparison(config)
    if args.format == "csv":
        import io

        buffer = io.StringIO()
        write_rows_csv(rows, buffer)
        _emit(buffer.getvalue(), args.out)
    else:
        _emit(rows_to_json(rows), args.out)
    if args.plot:
        from . import plotting

        for path in plotting.render_comparison(rows, args.plot):
            sys.stderr.write(f"plot: {path}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="privconv", description="differentially private circular convolution")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p_transform = sub.add_parser("transform", help="unitary DFT/WHT of a sequence", add_help=True)
    p_transform.add_argument("--x", metavar="FILE", required=True, help="sequence file")
    p_transform.set_defaults(handler=_cmd_transform)

    p_convolve = sub.add_parser("convolve", help="exact circular or cube convolution")
    _add_filter_args(p_convolve)
    p_convolve.add_argument("--x", metavar="FILE", required=True)
    p_convolve.set_defaults(handler=_cmd_convolve)

    p_privatize = sub.add_parser("privatize", help="run a private convolution mechanism")
    p_privatize.add_argument("--mechanism", choices=MECHANISM_NAMES, required=True)
    _add_filter_args(p_privatize)
    p_privatize.add_argument("--x", metavar="FILE", help="input sequence (default: zeros)")
    _add_privacy_args(p_privatize, required=True)
    p_privatize.add_argument("--neighbor-p", type=int, choices=(1, 2), default=1, dest="neighbor_p")
    p_privatize.set_defaults(handler=_cmd_privatize)

    p_bounds = sub.add_parser("bounds", help="spectral lower bound and MSE yardsticks")
    _add_filter_args(p_bounds)
    _add_privacy_args(p_bounds, required=False)
    p_bounds.set_defaults(handler=_cmd_bounds)

    p_marginals = sub.add_parser("marginals", help="private generalized marginals on the cube")
    p_marginals.add_argument("--wdnf", metavar="FILE", help="w-DNF JSON formula")
    p_marginals.add_argument("--attrs", metavar="LIST", help="comma-separated attributes for a plain marginal")
    p_marginals.add_argument("--d", type=int, help="number of attributes")
    p_marginals.add_argument("--data", metavar="FILE", help="histogram file")
    p_marginals.add_argument("--tail", type=int, help="report the spectral tail outside the top 2^(d-K)")
    _add_privacy_args(p_marginals, required=False)
    p_marginals.set_defaults(handler=_cmd_marginals)

    p_bench = sub.add_parser("bench", help="Monte Carlo experiment sweeps")
    p_bench.add_argument("--config", metavar="FILE", required=True, help="ExperimentConfig JSON")
    p_bench.add_argument(
        "--experiment", choices=("comparison", "running-sum"), default="comparison"
    )
    p_bench.add_argument("--plot", metavar="DIR", help="also render PNG figures into DIR")
    p_bench.add_argument("--trials", type=int, help="override the config's trial count")
    p_bench.add_argument(
        "--worst-case-search",
        action="store_true",
        dest="worst_case_search",
        help="estimate on random inputs instead of zeros (cross-checks input independence)",
    )
    p_bench.set_defaults(handler=_cmd_bench)

    for p in (p_transform, p_convolve, p_privatize, p_bounds, p_marginals, p_bench):
        p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
        p.add_argument("--out", metavar="FILE", help="write output here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "command", None) is None:
            raise _UsageError("a subcommand is required")
        args.handler(args)
        return 0
    except _UsageError as err:
        sys.stderr.write(parser.format_usage())
        sys.stderr.write(f"error: {err}\n")
        return 1
    except SystemExit as err:  # argparse --help
        return 0 if err.code in (0, None) else int(err.code)
    except ValueError as err:
        sys.stderr.write(f"error: {err}\n")
        return 1
    except OSError as err:
        sys.stderr.write(f"error: {err}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
