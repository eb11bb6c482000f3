"""Command-line front end: reproduce the validation tables and apply
pointwise functions to serialized tensors.

Every subcommand writes one report row per table cell as CSV or JSON.  Exit
code 0 means success, 2 means some iteration did not converge, 1 means an
error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .cross import CrossConfig
from .distributions import (
    AlphaStableSpec,
    GaussianSpec,
    alpha_stable_grids,
    alpha_stable_pdf_tt,
    gaussian_hellinger_analytic,
    gaussian_kld_analytic,
    gaussian_pdf_tt,
)
from .pointwise import (
    IterationConfig,
    had_abs,
    had_exp,
    had_inverse,
    had_log,
    had_max,
    had_min,
    had_sign,
    had_sqrt_pair,
)
from .spectral import make_grid
from .stats import DivergenceConfig, DivergenceReport, hellinger_sq, kl_divergence
from .tt import TruncationConfig, tt_from_dense, tt_from_json, tt_random, tt_to_dense, tt_to_json

EXPERIMENTS = ("gaussian-kld", "gaussian-hellinger", "alpha-kld", "alpha-hellinger", "pointwise-bench")
CSV_COLUMNS = ("experiment", "d", "n", "value", "reference", "err_abs", "err_rel", "max_tt_rank",
               "wall_time_s", "config_hash")

# published table values, keyed by (experiment, alpha1, alpha2, d, n)
PUBLISHED_ALPHA = {
    ("alpha-kld", 2.0, 0.5, 8, 64): 2.27,
    ("alpha-hellinger", 1.5, 0.9, 16, 64): 0.223,
}

DEFAULT_PARAMS = {
    "gaussian-kld": {"mu1": 1.1, "mu2": 1.4, "sigma1": 1.5, "sigma2": 22.1, "method": "auto"},
    "gaussian-hellinger": {"mu1": 1.1, "mu2": 1.4, "sigma1": 1.5, "sigma2": 22.1, "method": "auto"},
    "alpha-kld": {"pairs": [[2.0, 0.5], [2.0, 1.9]], "sampling": "spatial", "form": "half_norm",
                  "method": "cross"},
    "alpha-hellinger": {"pairs": [[1.5, 0.9]], "sampling": "spatial", "form": "half_norm",
                        "method": "cross"},
    "pointwise-bench": {"ops": ["inverse", "sqrt", "log", "exp", "sign", "abs", "max", "min"], "rank": 2},
}

# grid and tolerance defaults per experiment, applied by the command line
# before any --config file or flag.  The alpha-stable pcf is sampled with
# step 2a/n = 0.5 as in the reference script.
EXPERIMENT_DEFAULTS = {
    "alpha-kld": {"d": [8], "n": 64, "a": 16.0, "eps": 1e-10, "cross_tol": 1e-6},
    "alpha-hellinger": {"d": [16], "n": 64, "a": 16.0, "eps": 1e-10, "cross_tol": 1e-6},
}


@dataclass
class ExperimentConfig:
    experiment: str
    d: tuple = (16,)
    n: int = 256
    a: float = 128.0
    eps: float = 1e-9
    tol: float = 1e-9
    cross_tol: float = 1e-8
    seed: int = 0
    params: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "csv"
    trace: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        self.d = tuple(int(x) for x in np.atleast_1d(self.d))
        for name in ("n", "a", "eps", "tol", "cross_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if any(x < 1 for x in self.d):
            raise ValueError("d must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.format not in ("csv", "json"):
            raise ValueError(f"unknown format {self.format!r}")
        self.params = {**DEFAULT_PARAMS[self.experiment], **self.params}

    def hash(self) -> str:
        """Short digest of everything that determines the numbers."""
        body = {k: v for k, v in asdict(self).items() if k not in ("out", "format", "trace")}
        blob = json.dumps(body, sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def divergence_config(self, method: str | None = None) -> DivergenceConfig:
        trunc = TruncationConfig(self.eps)
        return DivergenceConfig(
            method=method or self.params.get("method", "auto"),
            trunc=trunc,
            iteration=IterationConfig(tol=self.tol, trunc=trunc),
            cross=CrossConfig(tol=self.cross_tol, seed=self.seed),
        )


def _row(cfg: ExperimentConfig, rep: DivergenceReport, experiment: str | None = None, **extra) -> dict:
    row = {"experiment": experiment or cfg.experiment, **rep.as_dict(), "config_hash": cfg.hash()}
    row.update(extra)
    row.setdefault("converged", True)
    return row


def _memory_mb(rank: int, d: int, n: int, width: int = 8) -> float:
    """Estimate: parameter count of a TT with uniform rank ``rank``."""
    return d * n * rank * rank * width / 2**20


def _gaussian_pair(cfg: ExperimentConfig, d: int):
    p = cfg.params
    grid, _ = make_grid(cfg.a, cfg.n, d)
    s1 = GaussianSpec.isotropic(d, p["mu1"], p["sigma1"])
    s2 = GaussianSpec.isotropic(d, p["mu2"], p["sigma2"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return grid, s1, s2, gaussian_pdf_tt(s1, grid), gaussian_pdf_tt(s2, grid)


def cmd_gaussian_kld(cfg: ExperimentConfig) -> list[dict]:
    rows = []
    for d in cfg.d:
        grid, s1, s2, p, q = _gaussian_pair(cfg, d)
        rep = kl_divergence(p, q, grid, cfg.divergence_config()).with_reference(gaussian_kld_analytic(s1, s2))
        rows.append(_row(cfg, rep))
    return rows


def cmd_gaussian_hellinger(cfg: ExperimentConfig) -> list[dict]:
    rows = []
    for d in cfg.d:
        grid, s1, s2, p, q = _gaussian_pair(cfg, d)
        rep = hellinger_sq(p, q, grid, cfg.divergence_config())
        rows.append(_row(cfg, rep.with_reference(gaussian_hellinger_analytic(s1, s2))))
    return rows


def cmd_alpha_experiments(cfg: ExperimentConfig) -> list[dict]:
    """alpha-stable KL or squared Hellinger for every ``(alpha1, alpha2)`` pair."""
    p = cfg.params
    divergence = kl_divergence if cfg.experiment == "alpha-kld" else hellinger_sq
    rows = []
    for d in cfg.d:
        grid, dual = alpha_stable_grids(cfg.a, cfg.n, d, sampling=p["sampling"])
        cache = {}

        def pdf(alpha):
            if alpha not in cache:
                spec = AlphaStableSpec(alpha, d, form=p["form"])
                cache[alpha] = alpha_stable_pdf_tt(spec, grid, dual, trunc=TruncationConfig(cfg.eps))
            return cache[alpha]

        for a1, a2 in p["pairs"]:
            P, Q = pdf(float(a1)), pdf(float(a2))
            rep = divergence(P, Q, grid, cfg.divergence_config())
            rep.max_tt_rank = max(rep.max_tt_rank, P.tensor.max_rank, Q.tensor.max_rank)
            ref = PUBLISHED_ALPHA.get((cfg.experiment, float(a1), float(a2), d, cfg.n))
            if ref is not None:
                rep.with_reference(ref)
            rows.append(_row(cfg, rep, alpha1=a1, alpha2=a2,
                             normalization_error=max(P.info["normalization_error"], Q.info["normalization_error"]),
                             memory_mb_estimate=_memory_mb(rep.max_tt_rank, d, cfg.n)))
    return rows


def _bench_ops(it: IterationConfig):
    """``name -> (tt function returning (tensor, converged), numpy reference, input kind)``."""
    def res(r):
        return r.value, r.converged

    return {
        "inverse": (lambda w: res(had_inverse(w, it)), lambda x: 1.0 / x, "positive"),
        "sqrt": (lambda w: res(had_sqrt_pair(w, it, inverse=False)[0]), np.sqrt, "positive"),
        "log": (lambda w: res(had_log(w, it)), np.log, "positive"),
        "exp": (lambda w: res(had_exp(w, it)), np.exp, "signed"),
        "sign": (lambda w: res(had_sign(w, it)), np.sign, "signed"),
        "abs": (lambda w: (had_abs(w, it), True), np.abs, "signed"),
        "max": (lambda w: (had_max(w, it)[0], True), np.max, "signed"),
        "min": (lambda w: (had_min(w, it)[0], True), np.min, "signed"),
    }


def cmd_pointwise_bench(cfg: ExperimentConfig) -> list[dict]:
    """Each pointwise routine on a random tensor against its dense value;
    ``value`` is the relative error, the reference is zero."""
    it = IterationConfig(tol=cfg.tol, trunc=TruncationConfig(cfg.eps))
    ops = _bench_ops(it)
    rows = []
    for d in cfg.d:
        rng = np.random.default_rng(cfg.seed)
        modes = (cfg.n,) * d
        base = tt_random(modes, [cfg.params["rank"]] * (d - 1), rng)
        dense = tt_to_dense(base)
        scale = np.abs(dense).max()
        # positive inputs in [1, 2], signed inputs in [-1, 1] with |x| >= 0.1
        for name in cfg.params["ops"]:
            fn, ref_fn, kind = ops[name]
            x = 1.5 + 0.5 * dense / scale if kind == "positive" else _away_from_zero(dense / scale)
            w = _tt_of(x, cfg.eps)
            t0 = time.perf_counter()
            out, converged = fn(w)
            wall = time.perf_counter() - t0
            ref = ref_fn(x)
            if np.ndim(ref) == 0:
                err = abs(float(out) - float(ref)) / max(abs(float(ref)), 1e-300)
                rank = w.max_rank
            else:
                err = float(np.linalg.norm(tt_to_dense(out) - ref) / np.linalg.norm(ref))
                rank = out.max_rank
            rep = DivergenceReport(name=name, value=err, max_tt_rank=rank, wall_time_s=wall, d=d, n=cfg.n,
                                   method="algebra").with_reference(0.0)
            rep.err_rel = err
            rows.append(_row(cfg, rep, experiment=f"pointwise-bench:{name}", converged=bool(converged)))
    return rows


def _away_from_zero(x):
    return np.where(x >= 0, 0.1 + 0.9 * x, -0.1 + 0.9 * x)


def _tt_of(x, eps):
    return tt_from_dense(x, TruncationConfig(min(eps, 1e-12)))


COMMANDS = {
    "gaussian-kld": cmd_gaussian_kld,
    "gaussian-hellinger": cmd_gaussian_hellinger,
    "alpha-kld": cmd_alpha_experiments,
    "alpha-hellinger": cmd_alpha_experiments,
    "pointwise-bench": cmd_pointwise_bench,
}

FUNCTIONS = ("sqrt", "inverse", "log", "exp", "abs", "sign", "inverse_sqrt")


def cmd_func(w, function: str, it: IterationConfig):
    """Apply a pointwise function to a TT tensor; returns ``(tensor, diagnostics)``."""
    if function == "sqrt":
        r = had_sqrt_pair(w, it, inverse=False)[0]
    elif function == "inverse_sqrt":
        r = had_sqrt_pair(w, it)[1]
    elif function == "inverse":
        r = had_inverse(w, it)
    elif function == "log":
        r = had_log(w, it)
    elif function == "exp":
        r = had_exp(w, it)
    elif function == "abs":
        return had_abs(w, it), {"function": function}
    elif function == "sign":
        r = had_sign(w, it)
    else:
        raise ValueError(f"unknown function {function!r}; choose from {FUNCTIONS}")
    diag = {"function": function, "iterations": r.iterations, "converged": r.converged,
            "final_step_norm": r.final_step_norm, "max_rank_seen": r.max_rank_seen}
    return r.value, diag


# output ---------------------------------------------------------------------------

def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_rows(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2, default=float) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# argument parsing ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ttdiv", description=__doc__.split("\n\n")[0].replace("\n", " "))
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--d", type=int, nargs="+", help="dimensions, one row per value")
        sp.add_argument("--n", type=int, help="grid points per dimension")
        sp.add_argument("--a", type=float, help="grid half-width")
        _common(sp)
    fp = sub.add_parser("func", help="apply a pointwise function to a TT tensor stored as JSON")
    fp.add_argument("input", help="TT-JSON file ('-' for stdin)")
    fp.add_argument("--function", required=True, choices=FUNCTIONS)
    _common(fp)
    return parser


def _common(sp):
    sp.add_argument("--eps", type=float, help="truncation accuracy")
    sp.add_argument("--tol", type=float, help="iteration tolerance")
    sp.add_argument("--cross-tol", type=float, help="TT-cross tolerance")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="output path (default stdout)")
    sp.add_argument("--format", choices=("csv", "json"))
    sp.add_argument("--trace", action="store_true", help="emit iteration progress as JSON lines on stderr")
    sp.add_argument("--config", help="JSON file with config fields; command-line flags take precedence")


def config_from_args(args) -> ExperimentConfig:
    base = dict(EXPERIMENT_DEFAULTS.get(args.command, {}))
    if args.config:
        with open(args.config) as fh:
            base.update(json.load(fh))
    base.pop("experiment", None)
    for key in ("d", "n", "a", "eps", "tol", "cross_tol", "seed", "out", "format"):
        val = getattr(args, key, None)
        if val is not None:
            base[key] = val
    if args.trace:
        base["trace"] = True
    return ExperimentConfig(experiment=args.command, **base)


def _run_func(args) -> int:
    cfg_extra = {}
    if args.config:
        with open(args.config) as fh:
            cfg_extra = json.load(fh)
    eps = args.eps if args.eps is not None else cfg_extra.get("eps", 1e-12)
    tol = args.tol if args.tol is not None else cfg_extra.get("tol", 1e-10)
    src = sys.stdin if args.input == "-" else open(args.input)
    with src:
        w = tt_from_json(json.load(src))
    value, diag = cmd_func(w, args.function, IterationConfig(tol=tol, trunc=TruncationConfig(eps)))
    _emit(json.dumps({"tensor": tt_to_json(value), "diagnostics": diag}, default=float) + "\n", args.out)
    return 0 if diag.get("converged", True) else 2


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "func":
            return _run_func(args)
        cfg = config_from_args(args)
        if cfg.trace:
            print(json.dumps({"event": "start", "config": asdict(cfg), "config_hash": cfg.hash()}, default=list),
                  file=sys.stderr, flush=True)
        rows = COMMANDS[cfg.experiment](cfg)
        if cfg.trace:
            for r in rows:
                print(json.dumps({"event": "row", **r}, default=float), file=sys.stderr, flush=True)
        _emit(format_rows(rows, cfg.format), cfg.out)
        return 0 if all(r.get("converged", True) for r in rows) else 2
    except Exception as exc:  # noqa: BLE001 - report and map to the error exit code
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
