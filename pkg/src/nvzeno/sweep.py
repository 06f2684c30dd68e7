"""Parameter-grid runs behind the figure data.

A :class:`SweepSpec` names a protocol, its fixed arguments, and one or two
axes.  Each axis sets one or more parameters (several names step together,
e.g. the paired (omega, delta) cases of the model comparison).  Rows come
out in row-major axis order whatever the worker count.
"""
from __future__ import annotations

import dataclasses
import hashlib
import itertools
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .dynamics import BACKEND, IntegrationError
from .hamiltonians import SystemParams, ZenoRegimeWarning, build_full, embed_effective
from .metrics import EntanglementParams, LeakageError
from .protocols import (
    LOGICAL_LABELS, CpgSpec, ModelChoice, QstSpec, cpg_run, default_full_params, entanglement_run, qst_run,
)
from .qcore import NVLevel, Propagator, basis_index, basis_state

PARAM_FIELDS = tuple(f.name for f in dataclasses.fields(SystemParams))
PARAM_ALIASES = ("omega", "g")


# ------------------------------------------------------------------ protocols

def _eval_qst(params, args):
    window = None
    if args.get("window_lo") is not None:
        window = (args["window_lo"], args["window_hi"])
    alpha, beta = args["alpha"], args["beta"]
    norm = math.hypot(alpha, beta)
    rep = qst_run(QstSpec(params, alpha / norm, beta / norm, args["model"], window))
    return {
        "fidelity": rep.fidelity,
        "optimal_fidelity": rep.optimal_fidelity if rep.optimal_fidelity is not None else math.nan,
        "t_prime": rep.duration,
    }


def _eval_cpg(params, args):
    rep = cpg_run(CpgSpec(params, delta_t_frac=args["delta_t_frac"], model=args["model"],
                          compensate=bool(args["compensate"])))
    out = {"fidelity": rep.fidelity, "duration": rep.duration}
    for label, amp in zip(LOGICAL_LABELS, rep.truth_table):
        out[f"{label}_re"] = float(amp.real)
        out[f"{label}_im"] = float(amp.imag)
    out["fi_phase"] = rep.extras["fi_phase"]
    return out


def _eval_compare(params, args):
    t = args["t_frac"] * 2 * params.transfer_time
    space = params.space
    gf0 = basis_state(NVLevel.G, NVLevel.F, 0, space)
    i1, i2 = basis_index(NVLevel.G, NVLevel.F, 0, space), basis_index(NVLevel.F, NVLevel.G, 0, space)
    full = Propagator(build_full(params)).apply(gf0, t)
    eff = Propagator(embed_effective(params)).apply(gf0, t)
    out = {
        "time": t,
        "p1_full": abs(full[i1]) ** 2, "p2_full": abs(full[i2]) ** 2,
        "p1_eff": abs(eff[i1]) ** 2, "p2_eff": abs(eff[i2]) ** 2,
    }
    out["deviation"] = max(abs(out["p1_full"] - out["p1_eff"]), abs(out["p2_full"] - out["p2_eff"]))
    return out


def _eval_entanglement(params, args):
    p = EntanglementParams.from_ratio(args["r"], args["lam"])
    model = ModelChoice.parse(args["model"])
    full_params = None
    if model is not ModelChoice.EFFECTIVE:
        full_params = default_full_params(args["lam"]).with_(kappa=params.kappa, gamma=params.gamma,
                                                             n_max=params.n_max)
    series = entanglement_run(p, [args["t"]] if model is ModelChoice.EFFECTIVE else [0.0, args["t"]],
                              model, full_params)
    return {
        "concurrence_wootters": float(series.wootters[-1]),
        "concurrence_eq17": float(series.eq17[-1]),
        "leakage": float(series.leakage[-1]),
    }


@dataclass(frozen=True)
class ProtocolEntry:
    evaluate: object
    defaults: dict
    metrics: tuple


PROTOCOLS = {
    "qst": ProtocolEntry(_eval_qst, {"alpha": 1 / math.sqrt(2), "beta": 1 / math.sqrt(2), "model": "full",
                                     "window_lo": None, "window_hi": None},
                         ("fidelity", "optimal_fidelity", "t_prime")),
    "cpg": ProtocolEntry(_eval_cpg, {"delta_t_frac": 0.0, "model": "full", "compensate": False},
                         ("fidelity", "duration") + tuple(f"{l}_{p}" for l in LOGICAL_LABELS for p in ("re", "im"))
                         + ("fi_phase",)),
    "compare": ProtocolEntry(_eval_compare, {"t_frac": 1.0},
                             ("time", "p1_full", "p2_full", "p1_eff", "p2_eff", "deviation")),
    "entanglement": ProtocolEntry(_eval_entanglement, {"r": 1.0, "lam": 0.005, "t": 0.0, "model": "effective"},
                                  ("concurrence_wootters", "concurrence_eq17", "leakage")),
}


# ---------------------------------------------------------------------- specs

@dataclass(frozen=True)
class Axis:
    names: tuple
    values: tuple
    scale: str = "explicit"

    def __post_init__(self):
        names = (self.names,) if isinstance(self.names, str) else tuple(self.names)
        vals = tuple(tuple(float(x) for x in (v if np.ndim(v) else (v,))) for v in self.values)
        if len(vals) < 2:
            raise ValueError(f"axis {names} needs at least 2 points")
        if any(len(v) != len(names) for v in vals):
            raise ValueError(f"axis {names}: every point needs {len(names)} values")
        if not all(math.isfinite(x) for v in vals for x in v):
            raise ValueError(f"axis {names} has non-finite values")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", vals)

    @classmethod
    def span(cls, name: str, lo: float, hi: float, count: int, scale: str = "linear") -> "Axis":
        count = int(count)
        if count < 2:
            raise ValueError("axis count must be >= 2")
        if scale == "linear":
            pts = np.linspace(lo, hi, count)
        elif scale == "log":
            if lo <= 0 or hi <= 0:
                raise ValueError("log axis needs positive bounds")
            pts = np.geomspace(lo, hi, count)
        else:
            raise ValueError(f"unknown axis scale {scale!r}")
        return cls((name,), tuple((float(x),) for x in pts), scale)

    def __len__(self):
        return len(self.values)

    def to_dict(self) -> dict:
        return {"names": list(self.names), "values": [list(v) for v in self.values], "scale": self.scale}

    @classmethod
    def from_dict(cls, d: dict) -> "Axis":
        return cls(tuple(d["names"]), tuple(tuple(v) for v in d["values"]), d.get("scale", "explicit"))


@dataclass(frozen=True)
class SweepSpec:
    base: SystemParams
    axes: tuple
    protocol: str
    fixed: dict = field(default_factory=dict)
    metrics: tuple = ()
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        object.__setattr__(self, "metrics", tuple(self.metrics))
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}; expected one of {sorted(PROTOCOLS)}")
        if not 1 <= len(self.axes) <= 2:
            raise ValueError("a sweep takes one or two axes")
        entry = PROTOCOLS[self.protocol]
        known = set(PARAM_FIELDS) | set(PARAM_ALIASES) | set(entry.defaults)
        for axis in self.axes:
            for name in axis.names:
                if name not in known:
                    raise ValueError(f"axis name {name!r} is neither a system parameter nor a "
                                     f"{self.protocol} argument")
        for name in self.fixed:
            if name not in entry.defaults:
                raise ValueError(f"{self.protocol} has no argument {name!r}")
        for m in self.metrics:
            if m not in entry.metrics:
                raise ValueError(f"{self.protocol} does not produce metric {m!r}")

    @property
    def metric_names(self) -> tuple:
        return self.metrics or PROTOCOLS[self.protocol].metrics

    @property
    def axis_columns(self) -> tuple:
        return tuple(n for a in self.axes for n in a.names)

    def points(self):
        for combo in itertools.product(*(a.values for a in self.axes)):
            yield tuple(x for v in combo for x in v)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "protocol": self.protocol,
            "base": dataclasses.asdict(self.base),
            "fixed": dict(self.fixed),
            "axes": [a.to_dict() for a in self.axes],
            "metrics": list(self.metrics),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        return cls(SystemParams(**d["base"]), tuple(Axis.from_dict(a) for a in d["axes"]),
                   d["protocol"], dict(d.get("fixed", {})), tuple(d.get("metrics", ())), d.get("label", ""))

    def run_key(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class SweepResult:
    columns: tuple
    rows: list
    axes: list
    provenance: dict

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows])

    def grid(self, name: str) -> np.ndarray:
        """Metric reshaped to the axis shape."""
        shape = tuple(len(a["values"]) for a in self.axes)
        return self.column(name).astype(float).reshape(shape)

    @property
    def error_rows(self) -> list:
        k = self.columns.index("error")
        return [r for r in self.rows if r[k]]

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "rows": [list(r) for r in self.rows],
                "axes": self.axes, "provenance": self.provenance}


# -------------------------------------------------------------------- running

def _split(spec: SweepSpec, values: tuple):
    changes, args = {}, dict(PROTOCOLS[spec.protocol].defaults)
    args.update(spec.fixed)
    for name, v in zip(spec.axis_columns, values):
        if name in PARAM_FIELDS or name in PARAM_ALIASES:
            changes[name] = v
        else:
            args[name] = v
    return spec.base.with_(**changes), args


def _evaluate(task):
    spec, values = task
    names = spec.metric_names
    try:
        params, args = _split(spec, values)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ZenoRegimeWarning)
            metrics = PROTOCOLS[spec.protocol].evaluate(params, args)
        return tuple(float(metrics[m]) for m in names) + ("",)
    except IntegrationError:
        code = "integration_failure"
    except LeakageError:
        code = "leakage"
    except (ValueError, ZeroDivisionError):
        code = "invalid_parameters"
    except (ArithmeticError, np.linalg.LinAlgError):
        code = "numerical_failure"
    return tuple(math.nan for _ in names) + (code,)


def run_sweep(spec: SweepSpec, workers: int = 1, run_id: str | None = None) -> SweepResult:
    """Evaluate the protocol at every grid point.

    Failing points become rows with NaN metrics and a reason code in the
    ``error`` column instead of aborting the sweep.
    """
    points = list(spec.points())
    tasks = [(spec, v) for v in points]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [_evaluate(t) for t in tasks]
    columns = spec.axis_columns + spec.metric_names + ("error",)
    rows = [tuple(v) + r for v, r in zip(points, results)]
    provenance = {
        "tool": "nvzeno",
        "version": __version__,
        "run_id": run_id or spec.run_key(),
        "kernel_backend": BACKEND,
        "spec": spec.to_dict(),
    }
    return SweepResult(columns, rows, [a.to_dict() for a in spec.axes], provenance)


def rerun_from_provenance(result: SweepResult, workers: int = 1) -> SweepResult:
    spec = SweepSpec.from_dict(result.provenance["spec"])
    return run_sweep(spec, workers, result.provenance["run_id"])


# -------------------------------------------------------------------- figures

OPERATING_POINT = SystemParams.symmetric(omega=0.05, delta=0.5)
_FIG7_LAMBDA = 0.05 ** 2 / 0.5
_GT_MAX = 4 * np.pi / _FIG7_LAMBDA


def figure_recipe(fig_id: str) -> SweepSpec:
    """Canonical sweep behind each figure.

    Ranges the figures leave open are fixed here: the transfer robustness map
    spans Delta/g in [0.4, 0.6] x Omega/g in [0.04, 0.06] on 21 x 21 points,
    the decoherence maps use 11 x 11 points, and the concurrence maps use 25
    ratio (or lambda) values by 400 times over gt in [0, 4 pi / lambda_0],
    lambda_0 = 0.005.
    """
    base = OPERATING_POINT
    if fig_id == "fig2":
        return SweepSpec(base, (Axis(("omega", "delta"), ((0.05, 0.5), (0.01, 0.2))),
                                Axis.span("t_frac", 0.0, 1.0, 401)), "compare", label=fig_id)
    if fig_id == "fig3":
        return SweepSpec(base, (Axis.span("delta", 0.4, 0.6, 21), Axis.span("omega", 0.04, 0.06, 21)), "qst",
                         {"model": "full", "window_lo": 0.9, "window_hi": 1.1},
                         ("fidelity", "optimal_fidelity"), label=fig_id)
    if fig_id == "fig4":
        return SweepSpec(base, (Axis.span("gamma", 0.0, 0.01, 11), Axis.span("kappa", 0.0, 0.2, 11)), "qst",
                         {"model": "open"}, ("fidelity",), label=fig_id)
    if fig_id == "fig5":
        return SweepSpec(base, (Axis.span("delta_t_frac", -0.1, 0.1, 41),), "cpg", {"model": "full"},
                         label=fig_id)
    if fig_id == "fig6":
        return SweepSpec(base, (Axis.span("gamma", 0.0, 0.01, 11), Axis.span("kappa", 0.0, 0.2, 11)), "cpg",
                         {"model": "open"}, label=fig_id)
    if fig_id == "fig7":
        return SweepSpec(base, (Axis.span("r", 0.05, 3.0, 25), Axis.span("t", 0.0, _GT_MAX, 400)),
                         "entanglement", {"lam": _FIG7_LAMBDA, "model": "effective"}, label=fig_id)
    if fig_id == "fig8":
        return SweepSpec(base, (Axis.span("lam", 0.001, 0.05, 25), Axis.span("t", 0.0, _GT_MAX, 400)),
                         "entanglement", {"r": 1 / 3, "model": "effective"}, label=fig_id)
    raise ValueError(f"unknown figure {fig_id!r}; expected one of fig2..fig8")


FIGURES = tuple(f"fig{k}" for k in range(2, 9))
