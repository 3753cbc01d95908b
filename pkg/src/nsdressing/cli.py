"""Command-line front end.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure or a
verification residual above tolerance.
"""
from __future__ import annotations

import argparse
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .asymptotics import NoRayLimitError, a_limits, fit_ray, ray_profile, ray_shift, transmission
from .background import CutLineError, DomainError, NumericalFailure
from .configio import SCHEMA_VERSION, RunConfig, encode_complex, load_run_config
from .core import ConfigError, DressingConfig, Point, validate_config
from .dressing import RegularityError, delta_n, dressed_F, dressed_g, dressed_jost, log_det_A, potential
from .recursion import OracleFailure, oracle_values
from .spectral import discrete_constants, jump_check, relation_residual
from .verify import (
    delta_derivative_residual,
    integral_equation_residual,
    pde_residual,
    wronskian_residual,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

SUITES = ("pde", "wronskian", "oracle", "integral", "sign", "relation")
TOLERANCES = {
    "pde": 1e-6,
    "wronskian": 1e-5,
    "delta": 1e-5,
    "oracle": 1e-6,
    "oracle_n3": 1e-5,
    "integral": 1e-3,
    "relation": 1e-8,
}
DEFAULT_K = 0.37 + 0.61j


class _Fail(Exception):
    def __init__(self, code: int, message: str, payload: dict | None = None):
        super().__init__(message)
        self.code = code
        self.payload = payload


# -- formatting --------------------------------------------------------------

def _fmt(v: float) -> str:
    return "%.17g" % v


def _header(quantity: str, extra: dict | None = None) -> list[str]:
    lines = [f"# schema_version={SCHEMA_VERSION}", f"# quantity={quantity}"]
    for key, val in (extra or {}).items():
        lines.append(f"# {key}={val}")
    return lines


def _table_text(columns: Sequence[str], rows: np.ndarray, fmt: str, quantity: str,
                extra: dict | None = None) -> str:
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION, "quantity": quantity, "columns": list(columns),
               "rows": [[float(v) for v in r] for r in rows]}
        if extra:
            doc["meta"] = extra
        return json.dumps(doc, sort_keys=True) + "\n"
    buf = io.StringIO(newline="\n")
    for line in _header(quantity, extra):
        buf.write(line + "\n")
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(float(v)) for v in r) + "\n")
    return buf.getvalue()


def _json_text(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, complex) or isinstance(o, np.complexfloating):
        return encode_complex(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.ndarray):
        return o.tolist() if not np.iscomplexobj(o) else [_json_default(v) for v in o]
    raise TypeError(f"not serialisable: {type(o)}")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


def _suffixed(out: str | None, i: int, total: int) -> str | None:
    if out is None or total == 1:
        return out
    p = Path(out)
    return str(p.with_name(f"{p.stem}_k{i}{p.suffix}"))


# -- helpers -------------------------------------------------------------------

def _load(args) -> RunConfig:
    rc = load_run_config(args.config)
    report = validate_config(rc.dressing.params, rc.dressing.coupling)
    if not report.ok:
        raise _Fail(EXIT_CONFIG, "invalid configuration", report.as_dict())
    return rc


def _format(args, rc: RunConfig) -> str:
    return args.format or rc.output.get("format", "csv")


def _rowwise(fn: Callable[[np.ndarray, float], np.ndarray], rc: RunConfig, threads: int) -> np.ndarray:
    """Evaluate ``fn(x1_axis, x2)`` for every grid row; rows are assembled in order."""
    a1, a2 = rc.grid.axes()
    if threads > 1 and a2.size > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(lambda y: fn(a1, float(y)), a2))
    else:
        rows = [fn(a1, float(y)) for y in a2]
    return np.concatenate([np.atleast_1d(r) for r in rows])


def _sample_points(rc: RunConfig, n: int, seed: int = 0) -> np.ndarray:
    g = rc.grid
    rng = np.random.default_rng(seed)
    x1 = rng.uniform(g.x1_min, g.x1_max, n)
    x2 = rng.uniform(g.x2_min, g.x2_max, n)
    return np.column_stack([x1, x2])


def _probe_k(rc: RunConfig) -> complex:
    return complex(rc.k_samples[0]) if rc.k_samples else DEFAULT_K


# -- verbs -----------------------------------------------------------------------

def cmd_validate(args) -> int:
    rc = load_run_config(args.config)
    report = validate_config(rc.dressing.params, rc.dressing.coupling)
    doc = {"schema_version": SCHEMA_VERSION, "n": rc.dressing.n, **report.as_dict()}
    _emit(_json_text(doc), args.out)
    return EXIT_OK if report.ok else EXIT_CONFIG


def cmd_potential(args) -> int:
    rc = _load(args)
    cfg = rc.dressing
    u = _rowwise(lambda a1, y: potential(cfg, (a1, np.full_like(a1, y))), rc, args.threads)
    X1, X2 = rc.grid.mesh()
    rows = np.column_stack([X1, X2, u])
    _emit(_table_text(["x1", "x2", "u"], rows, _format(args, rc), "u"), args.out)
    return EXIT_OK


def cmd_jost(args) -> int:
    rc = _load(args)
    if not rc.k_samples:
        raise _Fail(EXIT_CONFIG, "jost needs at least one entry in k_samples")
    cfg = rc.dressing
    X1, X2 = rc.grid.mesh()
    ks = rc.k_samples
    for i, k in enumerate(ks):
        try:
            vals = _rowwise(lambda a1, y: dressed_jost(cfg, (a1, np.full_like(a1, y)), k), rc, args.threads)
        except DomainError as exc:
            raise _Fail(EXIT_CONFIG, f"k_samples[{i}] = {k}: {exc}") from exc
        rows = np.column_stack([X1, X2, vals.real, vals.imag])
        text = _table_text(["x1", "x2", "re", "im"], rows, _format(args, rc), "Phi_N",
                           {"k": json.dumps(encode_complex(k))})
        _emit(text, _suffixed(args.out, i, len(ks)))
    return EXIT_OK


def cmd_rays(args) -> int:
    rc = _load(args)
    cfg = rc.dressing
    fit_x2 = [float(v) for v in rc.output.get("fit_x2", [])]
    rays = []
    for j in range(1, cfg.n + 1):
        for ts in (1, -1):
            p = ray_profile(cfg, j, ts)
            entry = {
                "j": j, "time_sign": ts, "direction": p.direction, "depth": p.depth,
                "eps_plus": p.eps_plus, "eps_minus": p.eps_minus, "eps": p.eps,
                "shift": p.shift, "shift_product": ray_shift(cfg, j),
            }
            fits = []
            for y in fit_x2:
                if np.sign(y) != ts:
                    continue
                depth, rate, eps = fit_ray(cfg, j, y)
                fits.append({"x2": y, "depth": depth, "rate": rate, "eps": eps,
                             "eps_error": abs(eps - p.eps)})
            if fits:
                entry["fitted"] = fits
            rays.append(entry)
    _emit(_json_text({"schema_version": SCHEMA_VERSION, "rays": rays}), args.out)
    return EXIT_OK


def cmd_spectral(args) -> int:
    rc = _load(args)
    cfg = rc.dressing
    d = discrete_constants(cfg.params, cfg.coupling).d
    samples = []
    for k in rc.k_samples:
        try:
            ap, am = a_limits(cfg.params, k)
            samples.append({"k": k, "a_N": transmission(cfg.params, k), "A_plus": ap, "A_minus": am})
        except DomainError as exc:
            raise _Fail(EXIT_CONFIG, f"k = {k}: {exc}") from exc
    doc = {"schema_version": SCHEMA_VERSION, "d": [[encode_complex(v) for v in row] for row in d],
           "samples": samples}
    jump_k = [float(v) for v in rc.output.get("jump_k", [])]
    if jump_k and cfg.background.is_zero:
        doc["jump"] = [{"k": k, "residual": jump_check(cfg, Point(0.0, 0.0), k)} for k in jump_k]
    _emit(_json_text(doc), args.out)
    return EXIT_OK


def _oracle_report(cfg: DressingConfig, pts: np.ndarray, ks: Sequence[complex]) -> dict:
    ref = oracle_values(cfg, [tuple(p) for p in pts], ks)
    worst = {"u": 0.0, "Delta": 0.0, "g": 0.0, "F": 0.0}
    for p in pts:
        key = (float(p[0]), float(p[1]))
        o = ref[key]
        x = (np.array([p[0]]), np.array([p[1]]))
        closed = {"u": float(potential(cfg, x)[0])}
        if cfg.n:
            closed["Delta"] = float(delta_n(cfg, x, cfg.n)[0])
            closed["g"] = complex(dressed_g(cfg, x)[0])
        for name, val in closed.items():
            worst[name] = max(worst[name], abs(val - o[name]) / max(1.0, abs(o[name])))
        for k in ks:
            fk = complex(dressed_F(cfg, x, k)[0])
            worst["F"] = max(worst["F"], abs(fk - o["F"][k]) / max(1.0, abs(o["F"][k])))
    return worst


def cmd_oracle_compare(args) -> int:
    rc = _load(args)
    cfg = rc.dressing
    n_pts = int(rc.output.get("n_points", 10))
    pts = _sample_points(rc, n_pts)
    worst = _oracle_report(cfg, pts, list(rc.k_samples))
    tol = TOLERANCES["oracle"] if cfg.n <= 2 else TOLERANCES["oracle_n3"]
    ok = max(worst.values()) <= tol
    doc = {"schema_version": SCHEMA_VERSION, "max_rel": worst, "tolerance": tol, "ok": ok,
           "points": pts.tolist()}
    _emit(_json_text(doc), args.out)
    return EXIT_OK if ok else EXIT_NUMERIC


def _suite(name: str, rc: RunConfig) -> dict:
    cfg = rc.dressing
    n_pts = int(rc.output.get("n_points", 20))
    pts = _sample_points(rc, n_pts)
    k = _probe_k(rc)

    def u(a, b):
        return potential(cfg, (a, b))

    if name == "pde":
        reports = {"Phi_N": pde_residual(lambda a, b: dressed_jost(cfg, (a, b), k), u, pts)}
        if cfg.n:
            reports["g_N"] = pde_residual(lambda a, b: dressed_g(cfg, (a, b)), u, pts)
        return {key: (r.as_dict(), TOLERANCES["pde"]) for key, r in reports.items()}
    if name == "wronskian":
        if not cfg.n:
            return {}
        w = wronskian_residual(lambda a, b: dressed_jost(cfg, (a, b), k),
                               lambda a, b: dressed_g(cfg, (a, b)), u, pts)
        dd = delta_derivative_residual(cfg, pts)
        return {"F_N,g_N": (w.as_dict(), TOLERANCES["wronskian"]),
                "Delta_N": (dd.as_dict(), TOLERANCES["delta"])}
    if name == "oracle":
        worst = _oracle_report(cfg, pts[: min(10, n_pts)], [k])
        tol = TOLERANCES["oracle"] if cfg.n <= 2 else TOLERANCES["oracle_n3"]
        return {f"oracle_{q}": ({"max_rel": v}, tol) for q, v in worst.items()}
    if name == "integral":
        r = integral_equation_residual(cfg, Point(*pts[0]), k)
        return {"integral": ({"max_abs": abs(r), "max_rel": abs(r)}, TOLERANCES["integral"])}
    if name == "sign":
        big = _sample_points(rc, 10_000, seed=1)
        sign, _ = log_det_A(cfg, (big[:, 0], big[:, 1]))
        prod = float(np.prod(np.sign(cfg.lambdas.imag))) if cfg.n else 1.0
        bad = int(np.sum(sign * prod <= 0))
        return {"sign": ({"violations": bad, "max_rel": float(bad)}, 0.0)}
    if name == "relation":
        if not cfg.n:
            return {}
        worst = max(relation_residual(cfg, tuple(p)) for p in pts[:10])
        return {"relation": ({"max_rel": worst}, TOLERANCES["relation"])}
    raise _Fail(EXIT_CONFIG, f"unknown suite {name!r}")


def cmd_verify(args) -> int:
    rc = _load(args)
    names = SUITES if args.suite in (None, "all") else (args.suite,)
    results = {}
    ok = True
    for name in names:
        for key, (rep, tol) in _suite(name, rc).items():
            passed = rep["max_rel"] <= tol
            ok &= passed
            results[f"{name}:{key}"] = {**rep, "tolerance": tol, "passed": bool(passed)}
    _emit(_json_text({"schema_version": SCHEMA_VERSION, "ok": bool(ok), "results": results}), args.out)
    return EXIT_OK if ok else EXIT_NUMERIC


COMMANDS = {
    "validate": cmd_validate,
    "potential": cmd_potential,
    "jost": cmd_jost,
    "rays": cmd_rays,
    "spectral": cmd_spectral,
    "verify": cmd_verify,
    "oracle-compare": cmd_oracle_compare,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nsdressing", description="Multisoliton dressing on a background.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="grid output format (default from config, else csv)")
    p.add_argument("--suite", choices=SUITES + ("all",), help="verification suite (verify only)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for grid rows")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        sys.stderr.write("error: --threads must be >= 1\n")
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except _Fail as exc:
        sys.stderr.write(f"error: {exc}\n")
        if exc.payload is not None:
            sys.stderr.write(_json_text(exc.payload))
        return exc.code
    except NoRayLimitError as exc:
        sys.stderr.write(f"error: {exc} (rays need pairwise distinct Re(lambda))\n")
        return EXIT_CONFIG
    except (ConfigError, CutLineError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except (NumericalFailure, RegularityError, OracleFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
