"""Command-line front door.

Subcommands:
    bound    closed-form rows (ideal / gap-bound / lower) over an SNR range
    sim      the same plus genie-aided Monte Carlo rows with confidence
    figure   run one of the canned figure presets (fig2..fig9)
    mmse     Wishart eigenvalue MMSE over a feedback-SNR range
    specfun  ad-hoc special-function evaluation for debugging

Exit codes: 0 success, 2 parameter domain error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .exceptions import NumericalError, ParameterError, ZfMimoError
from .params import (AnalogAWGN, DigitalErrorFree, DigitalQAM, MacAnalog,
                     MacDigital, Perfect, SystemParams, TDD)
from .timecorr import BLOCK_IID, GaussMarkov, Jakes
from . import bounds, experiments, specfun

_SCHEMES = ("perfect", "analog", "tdd", "digital", "qam", "mac-analog", "mac-digital")


def _parse_range(text: str) -> tuple:
    """'start:stop:step' (inclusive) or a single number."""
    parts = text.split(":")
    if len(parts) == 1:
        return (float(parts[0]),)
    if len(parts) != 3:
        raise ParameterError(f"range must be start:stop:step, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise ParameterError(f"bad range {text!r}")
    n = int(round((stop - start) / step))
    return tuple(round(start + i * step, 12) for i in range(n + 1))


def _parse_process(text: str):
    if text == "iid":
        return BLOCK_IID
    if text.startswith("jakes:"):
        return Jakes(doppler=float(text.split(":", 1)[1]))
    if text.startswith("gm:"):
        return GaussMarkov(r=float(text.split(":", 1)[1]))
    raise ParameterError(f"unknown process {text!r}; use iid, jakes:F or gm:r")


def _build_scheme(args):
    name = args.scheme
    if name == "perfect":
        return Perfect()
    if name == "analog":
        return AnalogAWGN()
    if name == "tdd":
        return TDD(beta_tdd=args.beta_fb)
    if name == "digital":
        return DigitalErrorFree()
    if name == "qam":
        return DigitalQAM()
    if name == "mac-analog":
        return MacAnalog()
    if name == "mac-digital":
        return MacDigital()
    raise ParameterError(f"unknown scheme {name!r}")


def _build_params(args) -> SystemParams:
    return SystemParams(
        m=args.m, snr_db=0.0,
        beta1=args.beta1, beta2=args.beta2, beta_fb=args.beta_fb,
        alpha=args.alpha, gamma=args.gamma,
        group_size=args.l, beta_up=args.beta_up, delay=args.delay)


def _add_model_flags(parser):
    parser.add_argument("--scheme", required=True, choices=_SCHEMES)
    parser.add_argument("--m", type=int, default=4, help="base-station antennas (= users)")
    parser.add_argument("--l", type=int, default=None, help="feedback group size")
    parser.add_argument("--beta1", type=float, default=1.0, help="common pilots per antenna (inf ok)")
    parser.add_argument("--beta2", type=float, default=1.0, help="dedicated pilots per beam (inf ok)")
    parser.add_argument("--beta-fb", dest="beta_fb", type=float, default=1.0,
                        help="feedback symbols per coefficient (pilots for tdd)")
    parser.add_argument("--alpha", type=float, default=1.0, help="QAM bit-loading exponent")
    parser.add_argument("--gamma", type=float, default=1.0, help="uplink/downlink SNR ratio")
    parser.add_argument("--beta-up", dest="beta_up", type=float, default=None,
                        help="uplink training per terminal (mac-analog)")
    parser.add_argument("--snr-db", dest="snr_db", required=True,
                        help="SNR range start:stop:step in dB")
    parser.add_argument("--process", default="iid", help="iid | jakes:F | gm:r")
    parser.add_argument("--delay", type=int, default=0, choices=(0, 1))
    parser.add_argument("--out", default=None, help="CSV output path (default stdout)")


def _cmd_bound(args, with_sim: bool) -> int:
    params = _build_params(args)
    scheme = _build_scheme(args)
    process = _parse_process(args.process)
    curve = experiments.Curve(scheme=scheme, process=process, label=args.scheme)
    outputs = ("ideal", "gap-bound", "lower")
    trials = 0
    if with_sim:
        outputs = outputs + ("genie-upper",)
        trials = args.trials
    spec = experiments.SweepSpec(axis="snr_db", values=_parse_range(args.snr_db),
                                 fixed=params, curves=(curve,), outputs=outputs,
                                 trials=trials, seed=getattr(args, "seed", 0))
    rows = experiments.run_sweep(spec)
    _write(rows, spec, args.out)
    return 0


def _write(rows, spec, out_path):
    if out_path is None:
        import io
        import csv as _csv
        buf = io.StringIO()
        writer = _csv.writer(buf)
        writer.writerow(experiments.RESULT_COLUMNS)
        for row in rows:
            writer.writerow([getattr(row, f) if not isinstance(getattr(row, f), float)
                             else repr(getattr(row, f))
                             for f in ("experiment_id", "figure_tag", "scheme", "m", "l",
                                       "beta1", "beta2", "beta_fb", "alpha", "process",
                                       "process_param", "delay", "snr_db", "bound_kind",
                                       "value_bits", "ci95", "trials", "seed")])
        sys.stdout.write(buf.getvalue())
        return
    experiments.write_result_rows(rows, out_path)
    sidecar = experiments.write_spec_sidecar(spec, out_path)
    print(f"wrote {len(rows)} rows to {out_path} (spec: {sidecar})", file=sys.stderr)


def _cmd_figure(args) -> int:
    spec = experiments.figure_preset(args.tag, trials=args.trials, seed=args.seed)
    rows = experiments.run_sweep(spec)
    _write(rows, spec, args.out)
    return 0


def _cmd_mmse(args) -> int:
    method = {"closed": "closed-form", "mc": "monte-carlo"}[args.method]
    print("rho_db,rho,l,m,value,method")
    for rho_db in _parse_range(args.rho_db):
        rho = 10.0 ** (rho_db / 10.0)
        res = bounds.wishart_mmse(rho, args.l, args.m, method=method, trials=args.trials)
        print(f"{rho_db:g},{rho!r},{res.l},{res.m},{res.value!r},{res.method}")
    return 0


def _cmd_specfun(args) -> int:
    fn_args = [float(a) for a in args.args.split(",")] if args.args else []
    result = specfun.evaluate(args.fn, *fn_args)
    print(f"{result.value!r} (abs error estimate {result.abs_error_estimate:.2e})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zfmimo",
                                     description="Rate bounds for zero-forcing downlink "
                                                 "with training and channel-state feedback")
    sub = parser.add_subparsers(dest="command", required=True)

    p_bound = sub.add_parser("bound", help="closed-form bounds over an SNR range")
    _add_model_flags(p_bound)

    p_sim = sub.add_parser("sim", help="bounds plus genie-aided Monte Carlo")
    _add_model_flags(p_sim)
    p_sim.add_argument("--trials", type=int, default=100_000)
    p_sim.add_argument("--seed", type=int, default=0)

    p_fig = sub.add_parser("figure", help="run a canned figure preset")
    p_fig.add_argument("--tag", required=True, choices=experiments.FIGURE_TAGS)
    p_fig.add_argument("--trials", type=int, default=50_000)
    p_fig.add_argument("--seed", type=int, default=0)
    p_fig.add_argument("--out", default=None)

    p_mmse = sub.add_parser("mmse", help="Wishart eigenvalue MMSE")
    p_mmse.add_argument("--l", type=int, required=True)
    p_mmse.add_argument("--m", type=int, required=True)
    p_mmse.add_argument("--rho-db", dest="rho_db", required=True)
    p_mmse.add_argument("--method", choices=("closed", "mc"), default="closed")
    p_mmse.add_argument("--trials", type=int, default=200_000)

    p_sf = sub.add_parser("specfun", help="evaluate a special function")
    p_sf.add_argument("--fn", required=True)
    p_sf.add_argument("--args", default="")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bound":
            return _cmd_bound(args, with_sim=False)
        if args.command == "sim":
            return _cmd_bound(args, with_sim=True)
        if args.command == "figure":
            return _cmd_figure(args)
        if args.command == "mmse":
            return _cmd_mmse(args)
        if args.command == "specfun":
            return _cmd_specfun(args)
        parser.error(f"unknown command {args.command!r}")
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ZfMimoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
