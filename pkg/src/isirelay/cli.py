"""Scenario runner.

Usage::

    isirelay run <config> [--output DIR] [--seed N] [--draws N] [--bits|--nats] [--jobs N]
    isirelay validate <config>

Config grammar (INI, UTF-8, one scenario per file)::

    [scenario]
    model  = explicit-subband | circulant | lowpass-equal | lowpass-unequal
             | underwater | asynchronous
    bounds = comma-separated subset of df, df-waterfill, cf-kkt, cf-modified, cutset
    n      = band count (integer >= 2)
    seed   = integer >= 0            (optional, default 0)
    draws  = integer >= 1            (underwater only, default 500)

    [model]
    key = value                      (scalars, or comma-separated lists)

    [sweep]                          (optional)
    parameter = name of a scalar key of [model]
    start     = float
    stop      = float
    steps     = integer >= 2

    [output]                         (optional)
    name = file stem of the CSV and summary (default: config file stem)

Model keys and defaults are listed in ``MODEL_KEYS``.  Exit codes: 0 success,
2 validation failure, 3 solver failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bounds import binding_cut
from .circulant import CirculantChannel, SubbandChannel, subband_decompose
from .errors import RelayError
from .models import (
    AsynchGeometry,
    LowpassRelaySpec,
    UnderwaterSpec,
    asynch_profile,
    equal_bandwidth_capacity,
    lowpass_subband_channel,
    underwater_draw,
    unequal_bandwidth_capacity,
)
from .optimizers import (
    direct_waterfill_rate,
    solve_asynch_cf,
    solve_asynch_maximin,
    solve_cf_kkt,
    solve_cf_modified,
    solve_df_maximin,
    solve_df_maximin_total,
    solve_df_waterfill,
    two_hop_rate,
)

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

ALL_BOUNDS = ("df", "df-waterfill", "cf-kkt", "cf-modified", "cutset")

# scalar keys (with defaults) and list keys per model; None marks a required key
MODEL_KEYS: dict[str, dict[str, object]] = {
    "explicit-subband": {
        "a_SR": [], "a_SD": [], "a_RD": [], "P_S": None, "P_R": None, "P_t": math.nan,
        "permutation": [], "noise": "independent",
    },
    "circulant": {
        "h_SR": [], "h_SD": [], "h_RD": [], "noise_R": [1.0], "noise_D": [1.0],
        "P_S": None, "P_R": None, "P_t": math.nan, "noise": "independent",
    },
    "lowpass-equal": {"W": None, "N_1": None, "N_2": None, "P_S": None, "P_R": None},
    "lowpass-unequal": {
        "W_SR": None, "W_SD": None, "W_RD": None, "N_1": None, "N_2": None, "P_S": None, "P_R": None,
    },
    "underwater": {
        "a": 0.5, "h": 0.25, "d_SD": 1.0, "f_c": 27.0, "W": 10.0, "k": 1.5, "s": 0.0, "w": 10.0,
        "coherence_SR": 3.33, "coherence_SD": 5.0, "coherence_RD": 3.33, "A_0": 1.0, "P_t": 100.0,
    },
    "asynchronous": {
        "d": None, "alpha_att": 2.0, "P_S": None, "P_R": None, "sigma_R2": 1.0, "sigma_D2": 1.0,
    },
}

SUPPORTED_BOUNDS = {
    "explicit-subband": set(ALL_BOUNDS),
    "circulant": set(ALL_BOUNDS),
    "lowpass-equal": {"df", "cutset"},
    "lowpass-unequal": {"df", "cutset"},
    "underwater": {"df", "df-waterfill", "cutset"},
    "asynchronous": {"df", "cf-kkt", "cutset"},
}

BANDWIDTH_MODELS = {"lowpass-equal", "lowpass-unequal"}
SLACK_TOL = 1e-9
SANDWICH_TOL = 1e-9


class ConfigError(RelayError):
    """Config file violates the grammar or a model invariant."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


@dataclass(frozen=True)
class ScenarioConfig:
    model: str
    bounds: tuple[str, ...]
    n: int
    seed: int = 0
    draws: int = 500
    params: dict = field(default_factory=dict)
    sweep: tuple[str, float, float, int] | None = None
    name: str = "results"

    def sweep_values(self) -> list[float | None]:
        if self.sweep is None:
            return [None]
        _, start, stop, steps = self.sweep
        return [float(v) for v in np.linspace(start, stop, steps)]


@dataclass
class ResultRow:
    index: int
    value: float | None
    bounds: dict[str, float | str]
    extra: dict[str, float]
    binding: str
    residual: float
    infeasible: str
    flags: str
    wall_ms: float = 0.0


# config parsing


def _parse_value(raw: str, default):
    if isinstance(default, list):
        return [float(v) for v in raw.replace(";", ",").split(",") if v.strip()]
    if isinstance(default, str):
        return raw.strip()
    return float(raw)


def load_config(path: str | Path) -> tuple[ScenarioConfig | None, list[str]]:
    """Parse and validate a config file; returns the config and every violation found."""
    violations: list[str] = []
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (configparser.Error, UnicodeDecodeError) as exc:
        return None, [f"file: not a valid config ({exc.__class__.__name__})"]

    if not parser.has_section("scenario"):
        return None, ["scenario: missing section"]
    sc = parser["scenario"]
    model = sc.get("model", "").strip()
    if model not in MODEL_KEYS:
        violations.append(f"scenario.model: unknown model {model!r}")
    bounds = tuple(b.strip() for b in sc.get("bounds", "").split(",") if b.strip())
    if not bounds:
        violations.append("scenario.bounds: at least one bound is required")
    for b in bounds:
        if b not in ALL_BOUNDS:
            violations.append(f"scenario.bounds: unknown bound {b!r}")
        elif model in SUPPORTED_BOUNDS and b not in SUPPORTED_BOUNDS[model]:
            violations.append(f"scenario.bounds: {b!r} is not available for model {model!r}")

    def int_field(key, default, lo):
        raw = sc.get(key)
        if raw is None:
            if default is None:
                violations.append(f"scenario.{key}: missing")
            return default
        try:
            v = int(raw)
        except ValueError:
            violations.append(f"scenario.{key}: not an integer")
            return default
        if v < lo:
            violations.append(f"scenario.{key}: must be >= {lo} (n ≥ 2)" if key == "n" else f"scenario.{key}: must be >= {lo}")
        return v

    n = int_field("n", None, 2)
    seed = int_field("seed", 0, 0)
    draws = int_field("draws", 500, 1)

    params: dict = {}
    keys = MODEL_KEYS.get(model, {})
    section = parser["model"] if parser.has_section("model") else {}
    for key in section:
        if key not in keys:
            violations.append(f"model.{key}: unknown key for model {model!r}")
    for key, default in keys.items():
        if key in section:
            try:
                params[key] = _parse_value(section[key], default if default is not None else 0.0)
            except ValueError:
                violations.append(f"model.{key}: cannot parse {section[key]!r}")
        elif default is None:
            violations.append(f"model.{key}: missing")
        else:
            params[key] = default

    sweep = None
    if parser.has_section("sweep"):
        sw = parser["sweep"]
        pname = sw.get("parameter", "").strip()
        default = keys.get(pname, "")
        if pname not in keys or isinstance(default, (list, str)):
            violations.append(f"sweep.parameter: {pname!r} is not a scalar field of model {model!r}")
        try:
            start, stop = float(sw.get("start", "nan")), float(sw.get("stop", "nan"))
            steps = int(sw.get("steps", "0"))
            if not (math.isfinite(start) and math.isfinite(stop)):
                violations.append("sweep.start/stop: must be finite numbers")
            if steps < 2:
                violations.append("sweep.steps: must be >= 2")
            sweep = (pname, start, stop, steps)
        except ValueError:
            violations.append("sweep: start, stop and steps must be numbers")

    name = Path(path).stem
    if parser.has_section("output"):
        name = parser["output"].get("name", name).strip() or name

    if violations:
        return None, violations
    cfg = ScenarioConfig(model, bounds, n, seed, draws, params, sweep, name)
    # model invariants, checked on every sweep point
    for value in cfg.sweep_values():
        try:
            _check_model(cfg, _point_params(cfg, value))
        except RelayError as exc:
            where = f" at {cfg.sweep[0]}={value:g}" if value is not None else ""
            violations.append(f"model: {exc}{where}")
            break
    return (None if violations else cfg), violations


def _point_params(cfg: ScenarioConfig, value) -> dict:
    p = dict(cfg.params)
    if value is not None:
        p[cfg.sweep[0]] = value
    return p


def _check_model(cfg: ScenarioConfig, p: dict):
    m = cfg.model
    if m == "explicit-subband":
        ch = _explicit_channel(p)
        if ch.n != cfg.n:
            raise RelayError(f"gain lists have {ch.n} bands but n={cfg.n}")
        if p["permutation"]:
            perm = [int(v) for v in p["permutation"]]
            if sorted(perm) != list(range(cfg.n)):
                raise RelayError("permutation must reorder 0..n-1")
        _budgets(p)
    elif m == "circulant":
        _circulant_channel(p, cfg.n)
        _budgets(p)
    elif m == "lowpass-equal":
        LowpassRelaySpec(p["W"], p["N_1"], p["N_2"], p["P_S"], p["P_R"])
    elif m == "lowpass-unequal":
        _unequal_spec(p)
    elif m == "underwater":
        _underwater_spec(p, cfg.n, cfg.seed)
        if p["P_t"] < 0:
            raise RelayError("P_t must be nonnegative")
    elif m == "asynchronous":
        asynch_profile(AsynchGeometry(p["d"], p["alpha_att"]), p["sigma_R2"], p["sigma_D2"])
        _budgets(p)
    if p.get("noise", "independent") not in ("independent", "degraded"):
        raise RelayError("noise must be 'independent' or 'degraded'")


def _budgets(p):
    for key in ("P_S", "P_R"):
        if not (p[key] >= 0 and math.isfinite(p[key])):
            raise RelayError(f"{key} must be nonnegative and finite")


def _explicit_channel(p) -> SubbandChannel:
    return SubbandChannel(np.array(p["a_SR"]), np.array(p["a_SD"]), np.array(p["a_RD"]))


def _circulant_channel(p, n) -> SubbandChannel:
    return subband_decompose(
        CirculantChannel(n, p["h_SR"], p["h_SD"], p["h_RD"], p["noise_R"], p["noise_D"])
    )


def _unequal_spec(p) -> LowpassRelaySpec:
    return LowpassRelaySpec(
        max(p["W_SR"], p["W_RD"]), p["N_1"], p["N_2"], p["P_S"], p["P_R"], p["W_SR"], p["W_SD"], p["W_RD"]
    )


def _underwater_spec(p, n, seed) -> UnderwaterSpec:
    return UnderwaterSpec(
        a=p["a"], h=p["h"], d_SD=p["d_SD"], f_c=p["f_c"], W=p["W"], k=p["k"], s=p["s"], w=p["w"],
        coherence=(p["coherence_SR"], p["coherence_SD"], p["coherence_RD"]), A_0=p["A_0"],
        n=n, rng_seed=seed,
    )


# evaluation


def _subband_point(cfg: ScenarioConfig, ch: SubbandChannel, p: dict):
    P_S, P_R = p["P_S"], p["P_R"]
    P_t = p["P_t"] if math.isfinite(p["P_t"]) else P_S + P_R
    coherent = True
    if p.get("permutation"):
        coherent = np.array([int(v) for v in p["permutation"]]) == np.arange(ch.n)
    out, resid, binding, infeasible = {}, 0.0, "", ""
    for b in cfg.bounds:
        if b == "df":
            s = solve_df_maximin(ch, P_S, P_R, coherent=coherent)
            out[b] = s.rate
            binding = s.binding
            if 0 < s.lambda_star < 1:
                resid = max(resid, s.gap)
        elif b == "cutset":
            s = solve_df_maximin(ch, P_S, P_R, mode="cutset", noise=p.get("noise", "independent"))
            out[b] = s.rate
        elif b == "df-waterfill":
            out[b] = solve_df_waterfill(ch, P_t).rate
        elif b == "cf-kkt":
            if P_S <= 0:
                out[b] = 0.0
                continue
            s = solve_cf_kkt(ch, P_S, P_R, seed=cfg.seed)
            resid = max(resid, s.residual)
            if s.slack < -SLACK_TOL:
                out[b] = "infeasible"
                infeasible = "cf-kkt"
            else:
                out[b] = s.rate
        elif b == "cf-modified":
            out[b] = solve_cf_modified(ch, P_S, P_R)[1]
    return out, {}, binding, resid, infeasible


def _evaluate(cfg: ScenarioConfig, value):
    p = _point_params(cfg, value)
    m = cfg.model
    if m == "explicit-subband":
        return _subband_point(cfg, _explicit_channel(p), p)
    if m == "circulant":
        return _subband_point(cfg, _circulant_channel(p, cfg.n), p)
    if m == "lowpass-equal":
        spec = LowpassRelaySpec(p["W"], p["N_1"], p["N_2"], p["P_S"], p["P_R"])
        out = {}
        if "df" in cfg.bounds:
            out["df"] = equal_bandwidth_capacity(spec)[0]
        if "cutset" in cfg.bounds:
            ch = lowpass_subband_channel(spec, cfg.n)
            out["cutset"] = spec.W * solve_df_maximin(ch, spec.P_S, spec.P_R, "cutset", "degraded").rate
        return out, {}, "", 0.0, ""
    if m == "lowpass-unequal":
        cap = unequal_bandwidth_capacity(_unequal_spec(p))[0]
        return {b: cap for b in cfg.bounds}, {}, "", 0.0, ""
    if m == "underwater":
        spec = _underwater_spec(p, cfg.n, cfg.seed)
        acc = {b: 0.0 for b in cfg.bounds}
        ref = {"direct": 0.0, "two-hop": 0.0}
        resid = 0.0
        for i in range(cfg.draws):
            ch = underwater_draw(spec, i)
            for b in cfg.bounds:
                if b == "df":
                    s = solve_df_maximin_total(ch, p["P_t"])
                    acc[b] += s.rate
                    if 0 < s.lambda_star < 1:
                        resid = max(resid, s.gap)
                elif b == "cutset":
                    acc[b] += solve_df_maximin_total(ch, p["P_t"], mode="cutset").rate
                elif b == "df-waterfill":
                    acc[b] += solve_df_waterfill(ch, p["P_t"]).rate
            ref["direct"] += direct_waterfill_rate(ch, p["P_t"])
            ref["two-hop"] += two_hop_rate(ch, p["P_t"])[0]
        k = float(cfg.draws)
        return {b: v / k for b, v in acc.items()}, {r: v / k for r, v in ref.items()}, "", resid, ""
    if m == "asynchronous":
        prof = asynch_profile(AsynchGeometry(p["d"], p["alpha_att"]), p["sigma_R2"], p["sigma_D2"])
        out, binding, infeasible = {}, "", ""
        for b in cfg.bounds:
            if b == "df":
                s = solve_asynch_maximin(prof, p["P_S"], p["P_R"], cfg.n, "df")
                out[b] = s.rate
                binding = binding_cut(s.c1, s.c2)
            elif b == "cutset":
                out[b] = solve_asynch_maximin(prof, p["P_S"], p["P_R"], cfg.n, "cutset").rate
            elif b == "cf-kkt":
                s = solve_asynch_cf(prof, p["P_S"], p["P_R"], cfg.n)
                if s.slack < -SLACK_TOL:
                    out[b] = "infeasible"
                    infeasible = "cf-kkt"
                else:
                    out[b] = s.rate
        return out, {}, binding, 0.0, infeasible
    raise RelayError(f"unknown model {m!r}")


def _sandwich_flags(bounds: dict) -> str:
    up = bounds.get("cutset")
    if not isinstance(up, float):
        return ""
    flags = []
    for b in ("df", "df-waterfill", "cf-kkt", "cf-modified"):
        v = bounds.get(b)
        if isinstance(v, float) and v > up + SANDWICH_TOL * max(1.0, abs(up)):
            flags.append(f"{b}>cutset")
    return ";".join(flags)


def _run_point(args) -> ResultRow:
    cfg, index, value = args
    t0 = time.perf_counter()
    bounds, extra, binding, resid, infeasible = _evaluate(cfg, value)
    row = ResultRow(index, value, bounds, extra, binding, resid, infeasible, _sandwich_flags(bounds))
    row.wall_ms = 1e3 * (time.perf_counter() - t0)
    return row


def run_scenario(cfg: ScenarioConfig, jobs: int = 1) -> list[ResultRow]:
    """Evaluate every sweep point; rows come back in sweep order."""
    tasks = [(cfg, i, v) for i, v in enumerate(cfg.sweep_values())]
    if jobs <= 1 or len(tasks) == 1:
        return [_run_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_point, tasks))


# output


def _unit(cfg: ScenarioConfig, bits: bool) -> str:
    base = "bits" if bits else "nats"
    return f"{base}/s" if cfg.model in BANDWIDTH_MODELS else f"{base}/channel-use"


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if v is None or not math.isfinite(v):
        return "none"
    return format(v, ".12g")


def render_csv(cfg: ScenarioConfig, rows: list[ResultRow], bits: bool = True) -> str:
    unit = _unit(cfg, bits)
    scale = 1.0 / math.log(2.0) if bits else 1.0
    sweep_name = cfg.sweep[0] if cfg.sweep else "sweep"
    extra_keys = list(rows[0].extra) if rows else []
    header = ["index", sweep_name]
    header += [f"{b} [{unit}]" for b in cfg.bounds]
    header += [f"{k} [{unit}]" for k in extra_keys]
    header += ["binding", "residual", "infeasible", "flags"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        vals = [str(r.index), _fmt(r.value)]
        for b in cfg.bounds:
            v = r.bounds[b]
            vals.append(v if isinstance(v, str) else _fmt(v * scale))
        vals += [_fmt(r.extra[k] * scale) for k in extra_keys]
        vals += [r.binding or "none", _fmt(r.residual), r.infeasible or "none", r.flags or "none"]
        w.writerow(vals)
    return buf.getvalue()


def render_summary(cfg: ScenarioConfig, rows: list[ResultRow], bits: bool = True) -> str:
    unit = _unit(cfg, bits)
    scale = 1.0 / math.log(2.0) if bits else 1.0
    cols = [cfg.sweep[0] if cfg.sweep else "point"] + list(cfg.bounds)
    cols += list(rows[0].extra) if rows else []
    lines = [f"model: {cfg.model}   n: {cfg.n}   seed: {cfg.seed}   unit: {unit}"]
    lines.append("  ".join(f"{c:>14}" for c in cols))
    for r in rows:
        cells = [_fmt(r.value) if r.value is not None else str(r.index)]
        for b in cfg.bounds:
            v = r.bounds[b]
            cells.append(v if isinstance(v, str) else f"{v * scale:.6g}")
        cells += [f"{v * scale:.6g}" for v in r.extra.values()]
        lines.append("  ".join(f"{c:>14}" for c in cells))
    return "\n".join(lines) + "\n"


# entry points


def _override(cfg: ScenarioConfig, seed, draws) -> ScenarioConfig:
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if draws is not None:
        cfg = replace(cfg, draws=draws)
    return cfg


def cmd_run(args) -> int:
    try:
        cfg, violations = load_config(args.config)
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    if violations:
        print(f"invalid config: {'; '.join(violations)}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.seed is not None and args.seed < 0 or args.draws is not None and args.draws < 1:
        print("invalid config: --seed must be >= 0 and --draws >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    cfg = _override(cfg, args.seed, args.draws)
    try:
        rows = run_scenario(cfg, args.jobs)
    except RelayError as exc:
        print(f"solver failure in {cfg.model}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    bits = not args.nats
    out_dir = Path(args.output)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{cfg.name}.csv").write_text(render_csv(cfg, rows, bits), encoding="utf-8", newline="")
        summary = render_summary(cfg, rows, bits)
        (out_dir / f"{cfg.name}.summary.txt").write_text(summary, encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    sys.stdout.write(summary)
    total = sum(r.wall_ms for r in rows)
    print(f"wall time {total:.0f} ms over {len(rows)} point(s)", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        _, violations = load_config(args.config)
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    if not violations:
        print("ok: no violations")
        return EXIT_OK
    for v in violations:
        print(v)
    return EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isirelay", description="Relay channel bound calculator.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="evaluate a scenario and write CSV + summary")
    run.add_argument("config")
    run.add_argument("--output", default=".", help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override scenario seed")
    run.add_argument("--draws", type=int, default=None, help="override fading draw count")
    units = run.add_mutually_exclusive_group()
    units.add_argument("--bits", action="store_true", help="report bits (default)")
    units.add_argument("--nats", action="store_true", help="report nats")
    run.add_argument("--jobs", type=int, default=1, help="parallel sweep points")
    run.set_defaults(func=cmd_run)
    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
