"""Declarative sweep runner, figure presets and result persistence.

A sweep evaluates a set of curves (scheme + fading process + parameter
overrides) over one axis and emits one ResultRow per (axis value, curve,
bound kind).  All rows report SUM rates or sum-rate gaps in bits per
channel use (M times the per-user quantities of the bounds module),
matching how downlink throughput figures are usually read.  Rows are
written as headered CSV alongside a JSON sidecar holding the fully
resolved sweep for provenance; reruns with the same spec are
byte-identical.

Bound kinds: 'ideal' (zero-forcing with ideal channel knowledge),
'gap-bound' (closed-form rate-gap upper bound), 'lower' (ideal minus
gap, clamped at 0), 'genie-upper' (Monte Carlo genie-aided estimate,
carries a confidence halfwidth), 'ceiling' (high-SNR saturation level
for delayed feedback on regular processes).
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, replace

from .exceptions import ParameterError
from .params import (AnalogAWGN, DigitalErrorFree, DigitalQAM, MacAnalog,
                     MacDigital, Perfect, Scheme, SystemParams, TDD)
from .timecorr import (BLOCK_IID, BlockIID, FadingProcess, GaussMarkov, Jakes,
                       gauss_markov_from_doppler)
from . import bounds
from . import feedback as fb
from . import montecarlo as mc

__all__ = [
    "Curve",
    "SweepSpec",
    "ResultRow",
    "closed_form_gap",
    "run_sweep",
    "envelope_over_alpha",
    "figure_preset",
    "write_result_rows",
    "read_result_rows",
    "write_spec_sidecar",
    "FIGURE_TAGS",
]

BOUND_KINDS = ("ideal", "gap-bound", "lower", "genie-upper", "ceiling")
AXES = ("snr_db", "beta_fb", "beta1", "group_size")

RESULT_COLUMNS = ("experiment_id", "figure_tag", "scheme", "M", "L", "beta1",
                  "beta2", "beta_fb", "alpha", "process", "process_param",
                  "delay", "snr_db", "bound_kind", "value_bits", "ci95",
                  "trials", "seed")


@dataclass(frozen=True)
class Curve:
    """One plotted curve: a scheme over a fading process, with optional
    parameter overrides (e.g. a fixed SNR when the axis is beta_fb) and,
    for QAM curves, an alpha grid to form the envelope over."""

    scheme: Scheme
    process: FadingProcess = BLOCK_IID
    label: str = ""
    overrides: tuple = ()  # ((field, value), ...)
    alpha_grid: tuple = ()

    @property
    def name(self) -> str:
        return self.label or self.scheme.tag


@dataclass(frozen=True)
class SweepSpec:
    """A fully resolved sweep: axis, fixed parameters, curves and outputs."""

    axis: str
    values: tuple
    fixed: SystemParams
    curves: tuple
    outputs: tuple
    trials: int = 0
    seed: int = 0
    figure_tag: str = ""

    def __post_init__(self):
        if self.axis not in AXES:
            raise ParameterError(f"unknown axis {self.axis!r}; choose from {AXES}")
        if len(self.values) == 0:
            raise ParameterError("sweep axis range is empty")
        for kind in self.outputs:
            if kind not in BOUND_KINDS:
                raise ParameterError(f"unknown bound kind {kind!r}; choose from {BOUND_KINDS}")
        if "genie-upper" in self.outputs and self.trials < 1:
            raise ParameterError("genie-upper output needs trials >= 1")


@dataclass(frozen=True)
class ResultRow:
    experiment_id: str
    figure_tag: str
    scheme: str
    m: int
    l: int
    beta1: float
    beta2: float
    beta_fb: float
    alpha: float
    process: str
    process_param: float
    delay: int
    snr_db: float
    bound_kind: str
    value_bits: float
    ci95: float
    trials: int
    seed: int


def _curve_params(spec: SweepSpec, curve: Curve, value) -> SystemParams:
    p = spec.fixed
    for name, override in curve.overrides:
        p = replace(p, **{name: override})
    if spec.axis == "group_size":
        return replace(p, group_size=int(value))
    return replace(p, **{spec.axis: float(value)})


def closed_form_gap(params: SystemParams, scheme: Scheme,
                    process: FadingProcess = BLOCK_IID) -> bounds.GapBound:
    """Per-user rate-gap upper bound for a scheme/process/delay combination."""
    static = isinstance(process, BlockIID) and params.delay == 0
    if isinstance(scheme, Perfect):
        if static and params.perfect_csir:
            return bounds.GapBound(gap_bits=0.0, components={})
        if static:
            # Noiseless feedback of the one-shot estimate: analog gap in
            # the infinite-feedback-budget limit.
            s1 = 1.0 / (1.0 + params.beta1 * params.snr)
            s2 = 0.0 if math.isinf(params.beta2) else 1.0 / (1.0 + params.beta2 * params.snr)
            m, snr = params.m, params.snr
            comps = {"dedicated_training": snr / m * s2,
                     "csit_mismatch": snr / m * (m - 1) * s1}
            return bounds.GapBound(gap_bits=math.log1p(sum(comps.values())) / math.log(2.0),
                                   components=comps)
        return bounds.gap_with_prediction(params, process, params.delay, scheme="perfect")
    if isinstance(scheme, AnalogAWGN):
        if static:
            return bounds.gap_analog_awgn(params, mode="fdd")
        return bounds.gap_with_prediction(params, process, params.delay, scheme="analog")
    if isinstance(scheme, TDD):
        if not static:
            raise ParameterError("the reciprocal-training bound is defined for "
                                 "block-i.i.d. fading without delay")
        return bounds.gap_analog_awgn(replace(params, beta_fb=scheme.beta_tdd), mode="tdd")
    if isinstance(scheme, DigitalErrorFree):
        if static:
            return bounds.gap_digital(params, bits=scheme.bits)
        if scheme.bits is not None:
            raise ParameterError("prediction substitution supports only the "
                                 "from-symbols bit budget")
        return bounds.gap_with_prediction(params, process, params.delay, scheme="digital")
    if isinstance(scheme, DigitalQAM):
        if not static:
            raise ParameterError("the QAM-error bound is defined for block-i.i.d. "
                                 "fading without delay")
        model = fb.qam_error_prob(params.snr, params.alpha, params.beta_fb,
                                  params.m, mode=scheme.ser_mode)
        return bounds.gap_digital_errors(params, model)
    if isinstance(scheme, MacAnalog):
        if static:
            return bounds.gap_mac_analog(params)
        return bounds.gap_with_prediction(params, process, params.delay, scheme="mac-analog")
    if isinstance(scheme, MacDigital):
        if not static:
            raise ParameterError("the multi-access digital bound is defined for "
                                 "block-i.i.d. fading without delay")
        model = fb.mac_digital_error_prob(params.snr, params.alpha, params.beta_fb, params.m)
        return bounds.gap_digital_errors(params, model)
    raise ParameterError(f"unsupported scheme {scheme!r}")


def _qam_feasible(params: SystemParams, alpha: float) -> bool:
    return params.snr > 1.0 and params.snr ** (alpha / params.beta_fb) >= 2.0


def _alpha_candidates(curve: Curve, params: SystemParams) -> list[float]:
    if curve.alpha_grid:
        grid = [a for a in curve.alpha_grid if 1.0 <= a <= params.beta_fb]
    else:
        grid = [params.alpha]
    return [a for a in grid if _qam_feasible(params, a)]


def _genie(params: SystemParams, scheme: Scheme, process: FadingProcess,
           trials: int, seed: int) -> mc.EstimateWithCI:
    return mc.simulate_genie_rate(mc.SimConfig(params=params, scheme=scheme,
                                               process=process, trials=trials, seed=seed))


def _ceiling_value(params: SystemParams, process: FadingProcess) -> float | None:
    if params.delay != 1 or not isinstance(process, GaussMarkov):
        return None
    return bounds.regular_ceiling(params.m, 1.0 - process.r ** 2)


def _rows_for_curve(spec: SweepSpec, curve: Curve, value, experiment_id: str) -> list:
    params = _curve_params(spec, curve, value)
    m = params.m
    scheme = curve.scheme
    qam_like = isinstance(scheme, (DigitalQAM, MacDigital))
    ideal = bounds.zf_ideal_rate(params.snr, m)

    rows = []

    def emit(kind: str, value_bits: float, ci: float, alpha: float, trials: int):
        rows.append(ResultRow(
            experiment_id=experiment_id, figure_tag=spec.figure_tag,
            scheme=curve.name, m=m, l=params.group_size or 0,
            beta1=params.beta1, beta2=params.beta2, beta_fb=params.beta_fb,
            alpha=alpha, process=curve.process.kind,
            process_param=curve.process.param, delay=params.delay,
            snr_db=params.snr_db, bound_kind=kind,
            value_bits=max(0.0, value_bits), ci95=ci, trials=trials,
            seed=spec.seed))

    for kind in spec.outputs:
        try:
            if kind == "ideal":
                emit(kind, m * ideal, 0.0, 0.0, 0)
            elif kind in ("gap-bound", "lower"):
                if qam_like:
                    best = None
                    for alpha in _alpha_candidates(curve, params):
                        gap = closed_form_gap(replace(params, alpha=alpha), scheme,
                                              curve.process)
                        if best is None or gap.gap_bits < best[0]:
                            best = (gap.gap_bits, alpha)
                    if best is None:
                        continue  # no feasible constellation at this point
                    gap_bits, alpha = best
                else:
                    gap_bits = closed_form_gap(params, scheme, curve.process).gap_bits
                    alpha = 0.0
                if kind == "gap-bound":
                    emit(kind, m * gap_bits, 0.0, alpha, 0)
                else:
                    emit(kind, m * (ideal - gap_bits), 0.0, alpha, 0)
            elif kind == "genie-upper":
                if qam_like:
                    best = None
                    for alpha in _alpha_candidates(curve, params):
                        est = _genie(replace(params, alpha=alpha), scheme,
                                     curve.process, spec.trials, spec.seed)
                        if best is None or est.mean > best[0].mean:
                            best = (est, alpha)
                    if best is None:
                        continue
                    est, alpha = best
                else:
                    est = _genie(params, scheme, curve.process, spec.trials, spec.seed)
                    alpha = 0.0
                emit(kind, m * est.mean, m * est.ci95_halfwidth, alpha, est.trials)
            elif kind == "ceiling":
                ceiling = _ceiling_value(params, curve.process)
                if ceiling is None:
                    continue  # defined only for delayed regular processes
                emit(kind, m * ceiling, 0.0, 0.0, 0)
        except ParameterError as exc:
            raise ParameterError(
                f"sweep aborted at row (axis {spec.axis}={value}, curve "
                f"{curve.name!r}, kind {kind!r}): {exc}") from exc
    return rows


def _sort_key(row: ResultRow):
    return (row.figure_tag, row.scheme, row.process, row.process_param,
            row.delay, row.m, row.l, row.beta1, row.beta2, row.beta_fb,
            row.alpha, row.snr_db, BOUND_KINDS.index(row.bound_kind))


def run_sweep(spec: SweepSpec) -> list:
    """Evaluate every (axis value, curve, bound kind) and return sorted rows."""
    experiment_id = _experiment_id(spec)
    rows = []
    for value in spec.values:
        for curve in spec.curves:
            rows.extend(_rows_for_curve(spec, curve, value, experiment_id))
    rows.sort(key=_sort_key)
    return rows


def envelope_over_alpha(spec: SweepSpec, alpha_grid) -> list:
    """Rows for the spec's QAM curves with each point maximized over alpha_grid.

    The grid is clipped to [1, beta_fb] pointwise; the maximizing alpha
    is recorded in each row.  A single-point grid reduces to run_sweep.
    """
    grid = tuple(float(a) for a in alpha_grid)
    if not grid:
        raise ParameterError("alpha grid is empty")
    curves = tuple(replace(c, alpha_grid=grid) for c in spec.curves
                   if isinstance(c.scheme, (DigitalQAM, MacDigital)))
    if not curves:
        raise ParameterError("envelope_over_alpha needs a QAM-type curve in the spec")
    return run_sweep(replace(spec, curves=curves))


def _experiment_id(spec: SweepSpec) -> str:
    blob = json.dumps(_spec_to_dict(spec), sort_keys=True).encode()
    return hashlib.sha1(blob).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Figure presets

FIGURE_TAGS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9")

_SNR_AXIS = tuple(float(x) for x in range(0, 31, 5))
_DOPPLER_10KMH = 0.0185
_DOPPLER_3KMH = 0.0056


def _qam_alpha_grid(beta_fb: float, step: float = 0.1) -> tuple:
    n = int(round((beta_fb - 1.0) / step))
    return tuple(round(1.0 + i * step, 10) for i in range(n + 1))


def figure_preset(tag: str, trials: int = 50_000, seed: int = 0) -> SweepSpec:
    """Fully parameterized sweep matching one of the throughput figures."""
    if tag not in FIGURE_TAGS:
        raise ParameterError(f"unknown figure tag {tag!r}; choose from {FIGURE_TAGS}")
    if tag == "fig2":
        fixed = SystemParams(m=4, snr_db=0.0, beta1=math.inf, beta2=math.inf, beta_fb=1.0)
        curves = (
            Curve(scheme=AnalogAWGN(), label="analog"),
            Curve(scheme=DigitalErrorFree(), label="digital"),
            Curve(scheme=DigitalQAM(), label="qam-envelope", alpha_grid=_qam_alpha_grid(1.0)),
        )
        return SweepSpec(axis="snr_db", values=_SNR_AXIS, fixed=fixed, curves=curves,
                         outputs=("ideal", "lower", "genie-upper"), trials=trials,
                         seed=seed, figure_tag=tag)
    if tag == "fig3":
        fixed = SystemParams(m=4, snr_db=0.0, beta1=math.inf, beta2=math.inf, beta_fb=2.0)
        curves = (
            Curve(scheme=AnalogAWGN(), label="analog"),
            Curve(scheme=DigitalErrorFree(), label="digital"),
            Curve(scheme=DigitalQAM(), label="qam-envelope", alpha_grid=_qam_alpha_grid(2.0)),
        )
        return SweepSpec(axis="snr_db", values=_SNR_AXIS, fixed=fixed, curves=curves,
                         outputs=("ideal", "genie-upper"), trials=trials, seed=seed,
                         figure_tag=tag)
    if tag == "fig4":
        fixed = SystemParams(m=4, snr_db=10.0, beta1=math.inf, beta2=math.inf, beta_fb=1.0)
        curves = []
        for snr_db in (10.0, 20.0):
            over = (("snr_db", snr_db),)
            curves.append(Curve(scheme=AnalogAWGN(), label=f"analog@{snr_db:g}dB",
                                overrides=over))
            curves.append(Curve(scheme=DigitalErrorFree(), label=f"digital@{snr_db:g}dB",
                                overrides=over))
            curves.append(Curve(scheme=DigitalQAM(), label=f"qam-envelope@{snr_db:g}dB",
                                overrides=over, alpha_grid=_qam_alpha_grid(4.0)))
        values = tuple(1.0 + 0.25 * i for i in range(13))  # beta_fb 1..4
        return SweepSpec(axis="beta_fb", values=values, fixed=fixed, curves=tuple(curves),
                         outputs=("ideal", "lower", "genie-upper"), trials=trials,
                         seed=seed, figure_tag=tag)
    if tag == "fig5":
        fixed = SystemParams(m=4, snr_db=0.0, beta1=math.inf, beta2=math.inf,
                             beta_fb=1.0, group_size=2)
        curves = tuple(Curve(scheme=MacAnalog(), label=f"mac-analog(L={l})",
                             overrides=(("group_size", l),)) for l in (2, 4))
        return SweepSpec(axis="snr_db", values=_SNR_AXIS, fixed=fixed, curves=curves,
                         outputs=("ideal", "lower", "genie-upper"), trials=trials,
                         seed=seed, figure_tag=tag)
    if tag == "fig6":
        fixed = SystemParams(m=4, snr_db=0.0, beta1=math.inf, beta2=math.inf,
                             beta_fb=3.0, group_size=2, alpha=4.0)
        curves = (
            Curve(scheme=MacAnalog(), label="mac-analog(L=2)",
                  overrides=(("group_size", 2), ("beta_fb", 3.0))),
            Curve(scheme=MacDigital(), label="mac-digital(L=4)",
                  overrides=(("group_size", 4), ("beta_fb", 8.0), ("alpha", 4.0))),
        )
        return SweepSpec(axis="snr_db", values=_SNR_AXIS, fixed=fixed, curves=curves,
                         outputs=("ideal", "lower"), trials=trials, seed=seed,
                         figure_tag=tag)
    if tag in ("fig7", "fig8"):
        delay = 0 if tag == "fig7" else 1
        fixed = SystemParams(m=4, snr_db=0.0, beta1=1.0, beta2=math.inf, delay=delay)
        if tag == "fig7":
            processes = (Jakes(doppler=_DOPPLER_10KMH),
                         gauss_markov_from_doppler(_DOPPLER_10KMH), BLOCK_IID)
        else:
            processes = (Jakes(doppler=_DOPPLER_3KMH), Jakes(doppler=_DOPPLER_10KMH),
                         gauss_markov_from_doppler(_DOPPLER_3KMH),
                         gauss_markov_from_doppler(_DOPPLER_10KMH))
        curves = tuple(Curve(scheme=Perfect(), process=p,
                             label=f"predicted({p.kind}:{p.param:g})")
                       for p in processes)
        values = tuple(float(x) for x in range(0, 41, 5))
        return SweepSpec(axis="snr_db", values=values, fixed=fixed, curves=curves,
                         outputs=("ideal", "lower"), trials=trials, seed=seed,
                         figure_tag=tag)
    # fig9: lower bound vs common-training budget at fixed SNR, one-step delay
    fixed = SystemParams(m=4, snr_db=10.0, beta1=1.0, beta2=math.inf, delay=1)
    curves = []
    for snr_db in (10.0, 15.0):
        for process in (Jakes(doppler=_DOPPLER_10KMH),
                        gauss_markov_from_doppler(_DOPPLER_10KMH)):
            curves.append(Curve(scheme=Perfect(), process=process,
                                label=f"predicted({process.kind})@{snr_db:g}dB",
                                overrides=(("snr_db", snr_db),)))
    values = tuple(float(x) for x in range(1, 17))
    return SweepSpec(axis="beta1", values=values, fixed=fixed, curves=tuple(curves),
                     outputs=("ideal", "lower"), trials=trials, seed=seed, figure_tag="fig9")


# ---------------------------------------------------------------------------
# Persistence


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_result_rows(rows, path) -> None:
    """Write rows as UTF-8 CSV with the canonical column order."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([
                row.experiment_id, row.figure_tag, row.scheme, row.m, row.l,
                _fmt(row.beta1), _fmt(row.beta2), _fmt(row.beta_fb),
                _fmt(row.alpha), row.process, _fmt(row.process_param),
                row.delay, _fmt(row.snr_db), row.bound_kind,
                _fmt(row.value_bits), _fmt(row.ci95), row.trials, row.seed])


def read_result_rows(path) -> list:
    """Parse a CSV written by write_result_rows back into ResultRow objects."""
    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if tuple(header) != RESULT_COLUMNS:
            raise ParameterError(f"unexpected result header {header}")
        for rec in reader:
            rows.append(ResultRow(
                experiment_id=rec[0], figure_tag=rec[1], scheme=rec[2],
                m=int(rec[3]), l=int(rec[4]), beta1=float(rec[5]),
                beta2=float(rec[6]), beta_fb=float(rec[7]), alpha=float(rec[8]),
                process=rec[9], process_param=float(rec[10]), delay=int(rec[11]),
                snr_db=float(rec[12]), bound_kind=rec[13],
                value_bits=float(rec[14]), ci95=float(rec[15]),
                trials=int(rec[16]), seed=int(rec[17])))
    return rows


def _spec_to_dict(spec: SweepSpec) -> dict:
    return {
        "axis": spec.axis,
        "values": list(spec.values),
        "fixed": asdict(spec.fixed),
        "curves": [{
            "scheme": asdict(c.scheme),
            "process": asdict(c.process),
            "label": c.label,
            "overrides": [list(o) for o in c.overrides],
            "alpha_grid": list(c.alpha_grid),
        } for c in spec.curves],
        "outputs": list(spec.outputs),
        "trials": spec.trials,
        "seed": spec.seed,
        "figure_tag": spec.figure_tag,
    }


def write_spec_sidecar(spec: SweepSpec, csv_path) -> str:
    """Write the resolved spec next to its CSV; returns the sidecar path."""
    sidecar = f"{csv_path}.spec.json"
    with open(sidecar, "w", encoding="utf-8") as handle:
        json.dump(_spec_to_dict(spec), handle, indent=2, sort_keys=True)
        handle.write("\n")
    return sidecar
