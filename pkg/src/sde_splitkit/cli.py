"""Command-line front end.

Subcommands map onto the experiment procedures: simulate (one path to
CSV), converge (coupled RMSE study), moments (ensemble second moments with
the closed-form bounds for the scalar toy model), spectrum (smoothed
periodogram of one component), density (kernel density of one component of
a long run), check (structural assumption + hypoellipticity report as
JSON) and nll (transition likelihood criterion of observed data).

Every run writes its outputs plus a JSON manifest `<out>.manifest.json`
echoing the configuration.  Given the same seed, output CSVs are
byte-identical for any `--threads` value.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import analysis, models
from .integrators import METHOD_TAGS, normalize_method, simulate_ensemble, simulate_path
from .noise import StreamKey

__all__ = ["RunConfig", "parse_args", "render", "emit_csv", "run", "main"]

THREADS_ENV = "SDE_SPLITKIT_THREADS"

COMMANDS = ("simulate", "converge", "moments", "spectrum", "density", "check", "nll")


class CLIUsageError(ValueError):
    """Invalid flag value; reported with exit status 2."""


def _parse_float(text: str, flag: str) -> float:
    """Parse a decimal number, allowing dyadic powers like 2^-6."""
    text = text.strip()
    try:
        if "^" in text:
            base, expo = text.split("^", 1)
            return float(base) ** float(expo)
        return float(text)
    except ValueError:
        raise CLIUsageError(f"{flag}: cannot parse number {text!r}") from None


def _parse_float_list(text: str, flag: str):
    """Comma list of numbers, or a dyadic range like 2^-6..2^-12."""
    text = text.strip()
    if ".." in text:
        lo_s, hi_s = text.split("..", 1)
        lo, hi = _parse_float(lo_s, flag), _parse_float(hi_s, flag)
        if "^" not in lo_s or "^" not in hi_s:
            raise CLIUsageError(f"{flag}: range syntax needs dyadic endpoints")
        k0 = round(np.log2(lo))
        k1 = round(np.log2(hi))
        step = 1 if k1 >= k0 else -1
        return [float(2.0**k) for k in range(int(k0), int(k1) + step, step)]
    return [_parse_float(tok, flag) for tok in text.split(",") if tok.strip()]


def _parse_params(text: Optional[str]) -> dict:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise CLIUsageError(f"--params: expected key=value, got {item!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = _parse_float(val, f"--params {key}")
    return out


@dataclass(frozen=True)
class RunConfig:
    command: str
    model: str = "fhn"
    params: dict = field(default_factory=dict)
    method: Optional[str] = None
    methods: tuple = ()
    dt: Optional[float] = None
    dt_list: tuple = ()
    dt_ref: Optional[float] = None
    t_end: Optional[float] = None
    n_steps: Optional[int] = None
    x0: tuple = ()
    seed: int = 42
    n_paths: int = 1
    threads: int = 1
    out: Optional[str] = None
    span_fraction: float = 0.3
    bandwidth: Optional[float] = None
    component: int = 1
    burn_in: float = 0.0
    dt_grid: tuple = ()
    box: tuple = (-100.0, 100.0)
    n_samples: int = 100_000
    data: Optional[str] = None

    def to_argv(self):
        """Canonical argv that parses back to this config."""
        argv = [self.command, "--model", self.model, "--seed", str(self.seed),
                "--threads", str(self.threads)]
        if self.params:
            argv += ["--params",
                     ",".join(f"{k}={v!r}" for k, v in self.params.items())]
        if self.method is not None:
            argv += ["--method", self.method]
        if self.methods:
            argv += ["--methods", ",".join(self.methods)]
        if self.dt is not None:
            argv += ["--dt", repr(self.dt)]
        if self.dt_list:
            argv += ["--dt-list", ",".join(repr(d) for d in self.dt_list)]
        if self.dt_ref is not None:
            argv += ["--dt-ref", repr(self.dt_ref)]
        if self.t_end is not None:
            argv += ["--t-end", repr(self.t_end)]
        if self.n_steps is not None:
            argv += ["--n-steps", str(self.n_steps)]
        if self.x0:
            argv += ["--x0", ",".join(repr(v) for v in self.x0)]
        if self.command in ("converge", "moments"):
            argv += ["--paths", str(self.n_paths)]
        if self.command == "spectrum":
            argv += ["--span-fraction", repr(self.span_fraction)]
        if self.command in ("spectrum", "density"):
            argv += ["--component", str(self.component)]
        if self.command == "density":
            argv += ["--burn-in", repr(self.burn_in)]
            if self.bandwidth is not None:
                argv += ["--bandwidth", repr(self.bandwidth)]
        if self.command == "check":
            if self.dt_grid:
                argv += ["--dt-grid", ",".join(repr(d) for d in self.dt_grid)]
            argv += ["--box", ",".join(repr(v) for v in self.box)]
            argv += ["--samples", str(self.n_samples)]
        if self.data is not None:
            argv += ["--data", self.data]
        if self.out is not None:
            argv += ["--out", self.out]
        return argv


def render(config: RunConfig):
    """Inverse of parse_args for valid configs."""
    return config.to_argv()


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="sde-splitkit",
        description="Splitting and Euler-Maruyama-family integrators for "
        "semi-linear SDEs with additive noise",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--model", choices=["toy", "fhn"], default="fhn")
        p.add_argument("--params", default="",
                       help="model parameters, e.g. eps=0.05,gamma=1.5")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out", required=out_required)

    p = sub.add_parser("simulate", help="simulate one path to CSV")
    common(p)
    p.add_argument("--method", required=True)
    p.add_argument("--dt", required=True)
    p.add_argument("--t-end")
    p.add_argument("--n-steps", type=int)
    p.add_argument("--x0", default="")

    p = sub.add_parser("converge", help="coupled RMSE study over a dt grid")
    common(p)
    p.add_argument("--methods", default=",".join(METHOD_TAGS))
    p.add_argument("--dt-list", required=True)
    p.add_argument("--dt-ref", required=True)
    p.add_argument("--t-end", default="10")
    p.add_argument("--x0", default="")
    p.add_argument("--paths", type=int, default=1000)

    p = sub.add_parser("moments", help="ensemble second moments (+ toy bounds)")
    common(p)
    p.add_argument("--method", required=True)
    p.add_argument("--dt", required=True)
    p.add_argument("--t-end", required=True)
    p.add_argument("--x0", default="")
    p.add_argument("--paths", type=int, default=10000)

    p = sub.add_parser("spectrum", help="smoothed periodogram of one component")
    common(p)
    p.add_argument("--method", required=True)
    p.add_argument("--dt", required=True)
    p.add_argument("--t-end", required=True)
    p.add_argument("--x0", default="")
    p.add_argument("--span-fraction", default="0.3")
    p.add_argument("--component", type=int, default=1)

    p = sub.add_parser("density", help="kernel density of one component")
    common(p)
    p.add_argument("--method", required=True)
    p.add_argument("--dt", required=True)
    p.add_argument("--t-end", required=True)
    p.add_argument("--x0", default="")
    p.add_argument("--bandwidth")
    p.add_argument("--component", type=int, default=1)
    p.add_argument("--burn-in", default="0")

    p = sub.add_parser("check", help="assumption + hypoellipticity report (JSON)")
    common(p)
    p.add_argument("--dt-grid", default="1e-4,1e-3,1e-2,1e-1")
    p.add_argument("--box", default="-100,100")
    p.add_argument("--samples", type=int, default=100_000)

    p = sub.add_parser("nll", help="-2 log-likelihood criterion of data")
    common(p, out_required=False)
    p.add_argument("--data", required=True)
    p.add_argument("--dt", required=True)

    return parser


def _threads_default(value):
    if value is not None:
        return value
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise CLIUsageError(
                f"{THREADS_ENV}={env!r} is not an integer"
            ) from None
    return 1


def parse_args(argv) -> RunConfig:
    """Parse and validate an argv into a RunConfig.

    Unknown flags and malformed numbers raise a usage error naming the
    offending flag; every numeric field is range-checked here, before any
    simulation starts.
    """
    argv = list(argv)
    # argparse treats "-1,0" as a flag; fold values onto flags that may
    # legitimately start with a minus sign
    for flag in ("--x0", "--box"):
        i = 0
        while i < len(argv) - 1:
            if argv[i] == flag and argv[i + 1].startswith("-"):
                argv[i : i + 2] = [f"{flag}={argv[i + 1]}"]
            i += 1
    ns = _build_parser().parse_args(argv)
    kw = dict(
        command=ns.command,
        model=ns.model,
        params=_parse_params(ns.params),
        seed=ns.seed,
        threads=_threads_default(ns.threads),
        out=ns.out,
    )
    if kw["seed"] < 0:
        raise CLIUsageError("--seed must be >= 0")
    if kw["threads"] < 1:
        raise CLIUsageError("--threads must be >= 1")

    def method_of(text):
        try:
            return normalize_method(text)
        except ValueError as exc:
            raise CLIUsageError(f"--method: {exc}") from None

    def dt_of(text, flag="--dt"):
        dt = _parse_float(text, flag)
        if not (0.0 < dt < 1.0):
            raise CLIUsageError(f"{flag} must lie in (0, 1), got {dt:g}")
        return dt

    def x0_of(text):
        return tuple(_parse_float(t, "--x0") for t in text.split(",") if t.strip())

    def t_end_of(text):
        t = _parse_float(text, "--t-end")
        if not (t > 0):
            raise CLIUsageError(f"--t-end must be > 0, got {t:g}")
        return t

    if ns.command == "simulate":
        if (ns.t_end is None) == (ns.n_steps is None):
            raise CLIUsageError("simulate needs exactly one of --t-end | --n-steps")
        if ns.n_steps is not None and ns.n_steps < 0:
            raise CLIUsageError("--n-steps must be >= 0")
        kw.update(
            method=method_of(ns.method),
            dt=dt_of(ns.dt),
            t_end=t_end_of(ns.t_end) if ns.t_end is not None else None,
            n_steps=ns.n_steps,
            x0=x0_of(ns.x0),
        )
    elif ns.command == "converge":
        methods = tuple(
            method_of(m) for m in ns.methods.split(",") if m.strip()
        )
        if not methods:
            raise CLIUsageError("--methods is empty")
        dt_list = tuple(dt_of(repr(d), "--dt-list")
                        for d in _parse_float_list(ns.dt_list, "--dt-list"))
        if not dt_list:
            raise CLIUsageError("--dt-list is empty")
        if ns.paths < 1:
            raise CLIUsageError("--paths must be >= 1")
        kw.update(
            methods=methods,
            dt_list=dt_list,
            dt_ref=dt_of(ns.dt_ref, "--dt-ref"),
            t_end=t_end_of(ns.t_end),
            x0=x0_of(ns.x0),
            n_paths=ns.paths,
        )
    elif ns.command == "moments":
        if ns.paths < 2:
            raise CLIUsageError("--paths must be >= 2")
        kw.update(
            method=method_of(ns.method),
            dt=dt_of(ns.dt),
            t_end=t_end_of(ns.t_end),
            x0=x0_of(ns.x0),
            n_paths=ns.paths,
        )
    elif ns.command == "spectrum":
        span = _parse_float(ns.span_fraction, "--span-fraction")
        if not (0.0 < span < 1.0):
            raise CLIUsageError("--span-fraction must lie in (0, 1)")
        if ns.component < 1:
            raise CLIUsageError("--component is 1-based")
        kw.update(
            method=method_of(ns.method),
            dt=dt_of(ns.dt),
            t_end=t_end_of(ns.t_end),
            x0=x0_of(ns.x0),
            span_fraction=span,
            component=ns.component,
        )
    elif ns.command == "density":
        bw = None
        if ns.bandwidth is not None:
            bw = _parse_float(ns.bandwidth, "--bandwidth")
            if not (bw > 0):
                raise CLIUsageError("--bandwidth must be > 0")
        burn = _parse_float(ns.burn_in, "--burn-in")
        if burn < 0:
            raise CLIUsageError("--burn-in must be >= 0")
        if ns.component < 1:
            raise CLIUsageError("--component is 1-based")
        kw.update(
            method=method_of(ns.method),
            dt=dt_of(ns.dt),
            t_end=t_end_of(ns.t_end),
            x0=x0_of(ns.x0),
            bandwidth=bw,
            component=ns.component,
            burn_in=burn,
        )
    elif ns.command == "check":
        grid = tuple(_parse_float_list(ns.dt_grid, "--dt-grid"))
        if not grid or min(grid) <= 0 or max(grid) > 1:
            raise CLIUsageError("--dt-grid values must lie in (0, 1]")
        box = tuple(_parse_float_list(ns.box, "--box"))
        if len(box) != 2 or box[0] >= box[1]:
            raise CLIUsageError("--box must be lo,hi with lo < hi")
        if ns.samples < 1000:
            raise CLIUsageError("--samples must be >= 1000")
        kw.update(dt_grid=grid, box=box, n_samples=ns.samples)
    elif ns.command == "nll":
        kw.update(data=ns.data, dt=dt_of(ns.dt))
    return RunConfig(**kw)


# ---------------------------------------------------------------------------
# output

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def emit_csv(records, header, path):
    """Write rows as UTF-8 CSV with a header; floats use shortest
    round-trip decimal form, rows end with a newline, order is preserved."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for rec in records:
            fh.write(",".join(_fmt(v) for v in rec) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    return str(obj)


def _write_manifest(config: RunConfig, outputs, started_at, wall_seconds):
    if config.out is None:
        return None
    path = config.out + ".manifest.json"
    doc = {
        "command": config.command,
        "config": _jsonable(asdict(config)),
        "seed": config.seed,
        "started_at": started_at,
        "wall_seconds": wall_seconds,
        "outputs": list(outputs),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# command implementations

def _build_model(config: RunConfig):
    try:
        if config.model == "toy":
            return models.build_model("toy", **config.params)
        return models.build_model("fhn", **config.params)
    except TypeError as exc:
        raise CLIUsageError(f"--params: {exc}") from None


def _x0(config, model):
    if not config.x0:
        return np.zeros(model.d)
    if len(config.x0) != model.d:
        raise CLIUsageError(
            f"--x0 needs {model.d} components for model {config.model}"
        )
    return np.asarray(config.x0, dtype=float)


def _n_steps(config):
    if config.n_steps is not None:
        return config.n_steps
    n = config.t_end / config.dt
    if abs(n - round(n)) > 1e-9:
        raise CLIUsageError(
            f"--t-end {config.t_end:g} is not a multiple of --dt {config.dt:g}"
        )
    return int(round(n))


def _cmd_simulate(config):
    model = _build_model(config)
    traj = simulate_path(
        model, config.method, config.dt, _n_steps(config), _x0(config, model),
        StreamKey(config.seed, 0),
    )
    header = ["t"] + [f"x{i + 1}" for i in range(model.d)]
    rows = (
        (traj.times[i], *traj.states[i]) for i in range(traj.states.shape[0])
    )
    emit_csv(rows, header, config.out)
    if traj.exploded:
        print(
            f"path exploded at step {traj.exploded_at} "
            f"(t={traj.exploded_at * config.dt:g}); CSV truncated there",
            file=sys.stderr,
        )
    return [config.out]


def _cmd_converge(config):
    model = _build_model(config)
    table = analysis.rmse_study(
        model,
        config.methods,
        config.dt_list,
        config.dt_ref,
        config.t_end,
        _x0(config, model),
        config.n_paths,
        config.seed,
        n_threads=config.threads,
    )
    rows = [
        (r.method, r.delta, r.rmse, r.n_paths, r.excluded)
        for r in table.records
    ]
    emit_csv(rows, ["method", "dt", "rmse", "paths", "excluded"], config.out)
    return [config.out]


def _cmd_moments(config):
    model = _build_model(config)
    x0 = _x0(config, model)
    ens = simulate_ensemble(
        model, config.method, config.dt, _n_steps(config), x0,
        config.seed, config.n_paths, n_threads=config.threads,
    )
    ms = analysis.moment_series(ens)
    if config.model == "toy":
        b = analysis.bounds_1d(
            a=1.0,
            sigma=model.Sigma[0, 0],
            c4=model.constants["c4"],
            delta0=config.dt,
            e_x0_sq=float(x0 @ x0),
            times=ms.times,
        )
        rows = zip(ms.times, ms.mean_sq, ms.se, b.k_lt, b.k_s)
        header = ["t", "mean_sq", "se", "K_LT", "K_S"]
    else:
        rows = zip(ms.times, ms.mean_sq, ms.se)
        header = ["t", "mean_sq", "se"]
    emit_csv(rows, header, config.out)
    if ms.n_excluded:
        print(f"excluded {ms.n_excluded} exploded paths", file=sys.stderr)
    return [config.out]


def _series(config, model):
    traj = simulate_path(
        model, config.method, config.dt, _n_steps(config), _x0(config, model),
        StreamKey(config.seed, 0),
    )
    if traj.exploded:
        raise RuntimeError(
            f"path exploded at step {traj.exploded_at}; no series to analyse"
        )
    comp = config.component - 1
    if comp >= model.d:
        raise CLIUsageError(f"--component {config.component} > model dimension")
    return traj.states[:, comp]


def _cmd_spectrum(config):
    model = _build_model(config)
    series = _series(config, model)
    sd = analysis.periodogram(series, config.dt, config.span_fraction)
    emit_csv(zip(sd.frequencies, sd.power), ["freq", "power"], config.out)
    return [config.out]


def _cmd_density(config):
    model = _build_model(config)
    series = _series(config, model)
    skip = int(round(config.burn_in / config.dt))
    if skip >= series.size - 1:
        raise CLIUsageError("--burn-in leaves no samples")
    k = analysis.kde(series[skip:], bandwidth=config.bandwidth)
    emit_csv(zip(k.grid, k.density), ["x", "density"], config.out)
    return [config.out]


def _check_doc(config, model):
    report = analysis.check_assumptions(
        model,
        sample_box=config.box,
        n_samples=config.n_samples,
        delta_grid=config.dt_grid,
        seed=config.seed,
    )
    hypo = analysis.hypoellipticity_report(model, config.dt_grid)
    return {
        "model": model.label,
        "assumptions": {
            name: {
                "holds": "undetermined" if c.holds is None else bool(c.holds),
                "mode": c.mode,
                "constants": _jsonable(c.constants),
                "worst_margin": _jsonable(c.worst_margin),
                "worst_point": _jsonable(c.worst_point),
                "note": c.note,
            }
            for name, c in report.checks.items()
        },
        "discrete_lyapunov": _jsonable(report.lyapunov),
        "hypoellipticity": {
            "one_step_hypoelliptic": hypo.one_step_hypoelliptic,
            "per_delta": [
                {
                    "delta": e.delta,
                    "det": e.det,
                    "eigenvalues": _jsonable(e.eigenvalues),
                    "hypoelliptic": e.hypoelliptic,
                    "em_eigenvalues": _jsonable(e.em_eigenvalues),
                    "em_rank": e.em_rank,
                }
                for e in hypo.entries
            ],
        },
    }


def _cmd_check(config):
    model = _build_model(config)
    doc = _check_doc(config, model)
    with open(config.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return [config.out]


def _cmd_nll(config):
    model = _build_model(config)
    raw = np.genfromtxt(config.data, delimiter=",", names=True)
    cols = [f"x{i + 1}" for i in range(model.d)]
    missing = [c for c in cols if c not in (raw.dtype.names or ())]
    if missing:
        raise CLIUsageError(
            f"--data {config.data}: missing columns {missing} "
            f"(expected t,{','.join(cols)})"
        )
    data = np.column_stack([raw[c] for c in cols])
    value = analysis.lt_nll(data, model, config.dt)
    print(repr(value))
    outputs = []
    if config.out:
        with open(config.out, "w", encoding="utf-8") as fh:
            json.dump({"nll": value, "n_transitions": data.shape[0] - 1}, fh)
            fh.write("\n")
        outputs.append(config.out)
    return outputs


_DISPATCH = {
    "simulate": _cmd_simulate,
    "converge": _cmd_converge,
    "moments": _cmd_moments,
    "spectrum": _cmd_spectrum,
    "density": _cmd_density,
    "check": _cmd_check,
    "nll": _cmd_nll,
}


def run(config: RunConfig) -> int:
    """Execute a validated config; returns a process exit code."""
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    try:
        outputs = _DISPATCH[config.command](config)
    except CLIUsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _write_manifest(config, outputs, started, time.perf_counter() - t0)
    return 0


def main(argv=None) -> None:
    try:
        config = parse_args(sys.argv[1:] if argv is None else argv)
    except CLIUsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(2)
    raise SystemExit(run(config))


if __name__ == "__main__":
    main()
