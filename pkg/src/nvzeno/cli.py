"""Command-line front end.

Exit status: 0 on success, 1 when ``validate`` finds a failing check,
2 for configuration errors and 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import random
import sys

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .dynamics import BACKEND, IntegrationError
from .hamiltonians import (
    SystemParams, ZenoRegimeWarning, build_effective, build_full, build_zeno_reduced, cavity_coupling,
    eliminate_numerically, zeno_eigensystem,
)
from .metrics import EntanglementParams, LeakageError, concurrence_eq17, concurrence_wootters, eq14_state
from .protocols import (
    LOGICAL_LABELS, CpgSpec, ModelChoice, QstSpec, compare_hamiltonians, cpg_run, entanglement_run,
    operation_times_ns, qst_run,
)
from .qcore import is_hermitian
from .sweep import FIGURES, PROTOCOLS, SweepResult, SweepSpec, figure_recipe, run_sweep

log = logging.getLogger("nvzeno")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (IntegrationError, LeakageError, np.linalg.LinAlgError, ArithmeticError)


# -------------------------------------------------------------------- writers

def _cell(value, precision: int) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, f".{precision}g")


def _split_complex(columns, rows):
    """Replace each complex column by <name>_re and <name>_im."""
    cplx = [any(isinstance(r[k], (complex, np.complexfloating)) for r in rows) for k in range(len(columns))]
    if not any(cplx):
        return list(columns), [list(r) for r in rows]
    cols = []
    for name, c in zip(columns, cplx):
        cols.extend([f"{name}_re", f"{name}_im"] if c else [name])
    out = []
    for r in rows:
        row = []
        for v, c in zip(r, cplx):
            row.extend([complex(v).real, complex(v).imag] if c else [v])
        out.append(row)
    return cols, out


def format_csv(table: SweepResult, precision: int = 12) -> str:
    """One header row, LF line endings, '.' decimals, ``precision`` significant digits."""
    if not 6 <= precision <= 17:
        raise ConfigError("precision must be in [6, 17]")
    cols, rows = _split_complex(table.columns, table.rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(v, precision) for v in r])
    return buf.getvalue()


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        x = float(value)
        return x if math.isfinite(x) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def format_json(table: SweepResult) -> str:
    """Full precision; non-finite numbers become null."""
    cols, rows = _split_complex(table.columns, table.rows)
    doc = {"columns": cols, "rows": rows, "axes": table.axes, "provenance": table.provenance}
    return json.dumps(_jsonable(doc), indent=1, allow_nan=False) + "\n"


def parse_json(text: str) -> SweepResult:
    doc = json.loads(text)
    rows = [tuple(math.nan if v is None else v for v in r) for r in doc["rows"]]
    return SweepResult(tuple(doc["columns"]), rows, doc["axes"], doc["provenance"])


# ------------------------------------------------------------------- helpers

@contextlib.contextmanager
def no_rng():
    """Make any use of the global or new numpy/stdlib generators raise."""
    def forbid(*_a, **_k):
        raise RuntimeError("random number generation is disabled by --seedless")

    targets = [(np.random, n) for n in ("default_rng", "seed", "rand", "randn", "random", "normal",
                                         "uniform", "choice", "RandomState", "Generator")]
    targets += [(random, n) for n in ("random", "seed", "uniform", "gauss", "choice", "Random")]
    saved = [(mod, n, getattr(mod, n)) for mod, n in targets]
    for mod, n, _ in saved:
        setattr(mod, n, forbid)
    try:
        yield
    finally:
        for mod, n, orig in saved:
            setattr(mod, n, orig)


def _provenance(command: str, cfg: RunConfig, params: SystemParams | None, extra: dict, run_id: str | None):
    prov = {
        "tool": "nvzeno",
        "version": __version__,
        "command": command,
        "kernel_backend": BACKEND,
        "params": dataclasses.asdict(params) if params is not None else None,
        "config": {"params": cfg.params, "protocol": cfg.protocol, "g_GHz": cfg.g_ghz},
    }
    prov.update(extra)
    blob = json.dumps(_jsonable(prov), sort_keys=True, separators=(",", ":"))
    prov["run_id"] = run_id or hashlib.sha256(blob.encode()).hexdigest()[:16]
    return prov


def _model(args, cfg: RunConfig, default: str) -> ModelChoice:
    name = args.model or cfg.protocol.get("model", default)
    try:
        return ModelChoice.parse(name)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _table(columns, rows, prov) -> SweepResult:
    return SweepResult(tuple(columns), [tuple(r) for r in rows], [], prov)


def _unused(cfg: RunConfig, allowed: set, command: str):
    extra = set(cfg.protocol) - allowed
    if extra:
        raise ConfigError(f"{command} does not take {sorted(extra)}")
    if cfg.axes and command != "sweep":
        raise ConfigError("[axes] is only valid for the sweep command")


# ------------------------------------------------------------------ commands

def cmd_qst(args, cfg: RunConfig) -> SweepResult:
    _unused(cfg, {"model", "alpha", "beta", "window_lo", "window_hi"}, "qst")
    params = cfg.system()
    model = _model(args, cfg, "full")
    alpha = cfg.protocol.get("alpha", 1 / math.sqrt(2))
    beta = cfg.protocol.get("beta", 1 / math.sqrt(2))
    norm = math.hypot(alpha, beta)
    window = (cfg.protocol.get("window_lo", 0.9), cfg.protocol.get("window_hi", 1.1))
    rep = qst_run(QstSpec(params, alpha / norm, beta / norm, model, window))
    cols = ["t_prime", "fidelity", "optimal_fidelity", "trace"]
    row = [rep.duration, rep.fidelity, rep.optimal_fidelity, rep.extras.get("trace", 1.0)]
    extra = {"protocol": "qst", "model": model.value}
    if cfg.physical_units:
        times = operation_times_ns(params, cfg.g_ghz)
        cols += ["t_prime_ns", "gate_time_ns"]
        row += [times["qst_time_ns"], times["cpg_time_ns"]]
        extra["note"] = times["note"]
        print(f"note: {times['note']}", file=sys.stderr)
    return _table(cols, [row], _provenance("qst", cfg, params, extra, args.run_id))


def cmd_cpg(args, cfg: RunConfig) -> SweepResult:
    _unused(cfg, {"model", "delta_t_frac", "compensate"}, "cpg")
    params = cfg.system()
    model = _model(args, cfg, "full")
    rep = cpg_run(CpgSpec(params, delta_t_frac=cfg.protocol.get("delta_t_frac", 0.0), model=model,
                          compensate=cfg.protocol.get("compensate", False)))
    cols = ["fidelity", "duration"] + list(LOGICAL_LABELS) + ["fi_phase", "fi_population"]
    row = [rep.fidelity, rep.duration] + [complex(a) for a in rep.truth_table]
    row += [rep.extras["fi_phase"], rep.extras["fi_population"]]
    if "compensation_phase" in rep.extras:
        cols.append("compensation_phase")
        row.append(rep.extras["compensation_phase"])
    extra = {"protocol": "cpg", "model": model.value,
             "fidelity_definition": "<ideal|rho|ideal>, ideal = diag(-1,1,1,1) applied to the uniform "
                                    "superposition of fg, fi, ig, ii with the cavity empty"}
    if cfg.physical_units:
        cols.append("duration_ns")
        row.append(cfg.time_to_ns(rep.duration))
    print(f"note: |fi> keeps population {rep.extras['fi_population']:.6f} at phase "
          f"{rep.extras['fi_phase']:.3e} rad", file=sys.stderr)
    return _table(cols, [row], _provenance("cpg", cfg, params, extra, args.run_id))


def cmd_concurrence(args, cfg: RunConfig) -> SweepResult:
    _unused(cfg, {"model", "r", "lam", "t_max", "n_times"}, "concurrence")
    model = _model(args, cfg, "effective")
    r = cfg.protocol.get("r", 1.0)
    lam = cfg.protocol.get("lam", 0.005)
    if lam == 0 or r <= 0:
        raise ConfigError("concurrence needs lam != 0 and r > 0")
    t_max = cfg.protocol.get("t_max", 4 * math.pi / abs(lam))
    n = cfg.protocol.get("n_times", 400)
    if n < 2 or t_max <= 0:
        raise ConfigError("need n_times >= 2 and t_max > 0")
    times = np.linspace(0.0, t_max, n)
    params = None
    if model is not ModelChoice.EFFECTIVE:
        params = cfg.system(SystemParams.symmetric(omega=math.sqrt(abs(lam) * 0.5),
                                                   delta=math.copysign(0.5, lam)))
    series = entanglement_run(EntanglementParams.from_ratio(r, lam), times, model, params)
    cols = ["t", "concurrence_wootters", "concurrence_eq17", "leakage"]
    rows = [list(v) for v in zip(series.times, series.wootters, series.eq17, series.leakage)]
    if cfg.physical_units:
        cols.insert(1, "t_ns")
        for row in rows:
            row.insert(1, cfg.time_to_ns(row[0]))
    extra = {"protocol": "concurrence", "model": model.value, "r": r, "lam": lam}
    return _table(cols, rows, _provenance("concurrence", cfg, params, extra, args.run_id))


def cmd_compare(args, cfg: RunConfig) -> SweepResult:
    _unused(cfg, {"t_max", "n_times"}, "compare")
    params = cfg.system()
    t_end = cfg.protocol.get("t_max", 2 * params.transfer_time)
    n = cfg.protocol.get("n_times", 2001)
    if n < 2 or t_end <= 0:
        raise ConfigError("need n_times >= 2 and t_max > 0")
    cmp = compare_hamiltonians(params, t_end, t_end / (n - 1))
    cols = ["t", "p1_full", "p2_full", "p1_eff", "p2_eff"]
    rows = [list(v) for v in zip(cmp.times, cmp.full["P1"], cmp.full["P2"], cmp.effective["P1"],
                                 cmp.effective["P2"])]
    if cfg.physical_units:
        cols.insert(1, "t_ns")
        for row in rows:
            row.insert(1, cfg.time_to_ns(row[0]))
    print(f"note: max population deviation {cmp.max_deviation:.6g}", file=sys.stderr)
    extra = {"protocol": "compare", "max_deviation": cmp.max_deviation}
    return _table(cols, rows, _provenance("compare", cfg, params, extra, args.run_id))


def build_sweep_spec(args, cfg: RunConfig) -> SweepSpec:
    if args.figure:
        if cfg.axes or cfg.protocol.get("protocol"):
            raise ConfigError("--figure cannot be combined with a configured protocol or [axes]")
        try:
            spec = figure_recipe(args.figure)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        base = cfg.system(spec.base)
        fixed = dict(spec.fixed)
    else:
        name = cfg.protocol.get("protocol")
        if name is None or not cfg.axes:
            raise ConfigError("a sweep needs --figure or a config with 'protocol' and an [axes] table")
        if name not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {name!r}; expected one of {sorted(PROTOCOLS)}")
        spec = None
        base = cfg.system()
        fixed = {}
    name = spec.protocol if spec else cfg.protocol["protocol"]
    allowed = PROTOCOLS[name].defaults
    for key, value in cfg.protocol.items():
        if key == "protocol":
            continue
        if key not in allowed:
            raise ConfigError(f"{name} sweeps do not take {key!r}")
        fixed[key] = value
    if args.model:
        if "model" not in allowed:
            raise ConfigError(f"{name} sweeps have no model choice")
        fixed["model"] = ModelChoice.parse(args.model).value
    try:
        if spec:
            return dataclasses.replace(spec, base=base, fixed=fixed)
        return SweepSpec(base, cfg.sweep_axes(), name, fixed, label="config")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_sweep(args, cfg: RunConfig) -> SweepResult:
    spec = build_sweep_spec(args, cfg)
    workers = args.workers or cfg.output.get("workers", 1)
    result = run_sweep(spec, workers=workers, run_id=args.run_id or cfg.output.get("run_id"))
    bad = result.error_rows
    if bad:
        print(f"note: {len(bad)} of {len(result.rows)} points failed (see the error column)", file=sys.stderr)
    return result


def _validation_checks(params: SystemParams, model: ModelChoice):
    """Yield (name, passed, detail) for each built-in invariant."""
    H = build_full(params)
    yield "full Hamiltonian is Hermitian", is_hermitian(H), f"dim {H.shape[0]}"

    zs = zeno_eigensystem(params)
    V = cavity_coupling(params)
    sector = np.column_stack([zs.psi1, zs.psi2, zs.psi3])
    ev = np.sort(np.linalg.eigvalsh(sector.conj().T @ V @ sector))
    expected = np.sort([0.0, -math.sqrt(2) * params.g, math.sqrt(2) * params.g])
    ok = np.allclose(ev, expected, atol=1e-12)
    yield "cavity-coupling eigenvalues {0, -sqrt2 g, +sqrt2 g}", ok, "eigenvalues " + ", ".join(f"{x:+.12f}" for x in ev)

    if model is ModelChoice.EFFECTIVE or params.delta != 0:
        try:
            eff = build_effective(params)
            elim = eliminate_numerically(build_zeno_reduced(params), keep=2)
            dev = float(np.max(np.abs(eff - elim)))
            bound = 5 * params.omega ** 3 / params.delta ** 2
            yield "effective vs eliminated Hamiltonian", dev <= bound, f"max |diff| {dev:.3e} <= {bound:.3e}"
        except ValueError as exc:
            yield "effective vs eliminated Hamiltonian", False, str(exc)

    p = EntanglementParams.from_ratio(1.0, 0.005)
    times = np.linspace(0.0, 4 * math.pi / p.lam, 400)
    amps = eq14_state(p, times)
    c = np.array([concurrence_wootters(np.array([0, a, b, 0])) for a, b in amps])
    yield "concurrence is 1 for equal weights", bool(np.all(np.abs(c - 1) <= 1e-9)), f"min {c.min():.12f}"

    q = EntanglementParams.from_ratio(0.5, 0.005)
    amps = eq14_state(q, times)
    worst = 0.0
    for a, b in amps:
        m = np.outer([a, b], np.conj([a, b]))
        tangle = float(np.real(concurrence_eq17(4 * m[0, 0], 4 * m[0, 1], 4 * m[1, 0], 4 * m[1, 1])))
        worst = max(worst, abs(tangle - concurrence_wootters(np.array([0, a, b, 0])) ** 2))
    yield "closed-form concurrence equals squared Wootters", worst <= 1e-9, f"max |diff| {worst:.2e}"


def cmd_validate(args, cfg: RunConfig) -> int:
    _unused(cfg, {"model"}, "validate")
    params = cfg.system()
    model = _model(args, cfg, "full")
    failed = 0
    for name, ok, detail in _validation_checks(params, model):
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    for msg in params.zeno_warnings():
        print(f"WARN  {msg}")
    print(f"{'all checks passed' if not failed else f'{failed} check(s) failed'}")
    return EXIT_OK if not failed else EXIT_CHECK


COMMANDS = {"qst": cmd_qst, "cpg": cmd_cpg, "concurrence": cmd_concurrence, "compare": cmd_compare,
            "sweep": cmd_sweep}


# ---------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file")
    common.add_argument("--model", choices=[m.value for m in ModelChoice] + ["full_closed", "full_open"],
                        help="override the model")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--out", help="output path (default: standard output)")
    common.add_argument("--precision", type=int, default=None, help="CSV significant digits, 6-17")
    common.add_argument("--run-id", default=None, help="run id stored in the provenance")
    common.add_argument("--seedless", action="store_true", help="fail if any random number generator is used")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="nvzeno", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nvzeno {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("qst", parents=[common], help="quantum state transfer from NV 1 to NV 2")
    sub.add_parser("cpg", parents=[common], help="controlled phase gate truth table and fidelity")
    sub.add_parser("concurrence", parents=[common], help="concurrence along the exchange dynamics")
    sub.add_parser("compare", parents=[common], help="full vs effective population dynamics")
    sw = sub.add_parser("sweep", parents=[common], help="parameter grid from a config or a figure recipe")
    sw.add_argument("--figure", choices=FIGURES)
    sw.add_argument("--workers", type=int, default=None)
    sub.add_parser("validate", parents=[common], help="run the built-in invariant checks")
    return parser


def _emit(table: SweepResult, args, cfg: RunConfig) -> None:
    fmt = args.format or cfg.output.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown format {fmt!r}")
    precision = args.precision if args.precision is not None else cfg.output.get("precision", 12)
    text = format_csv(table, precision) if fmt == "csv" else format_json(table)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:  # reader closed early, e.g. piped into head
            sys.stderr.close()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not args.verbose:
        import warnings
        warnings.simplefilter("ignore", ZenoRegimeWarning)
    guard = no_rng() if args.seedless else contextlib.nullcontext()
    try:
        if args.precision is not None and not 6 <= args.precision <= 17:
            raise ConfigError("precision must be in [6, 17]")
        if getattr(args, "workers", None) is not None and args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.run_id is None and "run_id" in cfg.output:
            args.run_id = cfg.output["run_id"]
        with guard:
            if args.command == "validate":
                return cmd_validate(args, cfg)
            table = COMMANDS[args.command](args, cfg)
        _emit(table, args, cfg)
        return EXIT_OK
    except ConfigError as exc:
        print(f"nvzeno: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"nvzeno: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"nvzeno: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
