"""Command-line batch runner: ``virial-geo run | classify | list-systems``.

Exit codes: 0 when every requested relation converged and passed, 2 when a
relation failed or the run was rejected for energy drift, 1 for configuration
errors and chart-guard violations.
"""

import argparse
import json
import math
import os
import re
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import List, Optional

import numpy as np

from .dynamics import IntegratorConfig, State, integrate
from .errors import GuardViolation, InvalidParameter, StepLimitExceeded, VirialGeoError
from .geometry import classify_vector_field
from .systems import DEFAULTS, PRESETS, SystemId, build_system, fixture
from .virial import (
    GENERAL, HOMOGENEOUS, TWO_METRIC, VirialRelation, affine_observable, homogeneous_partition,
    relation_integrand, virial_residual,
)

SCHEMA_VERSION = "1.0"
MAX_STEPS_ENV = "VIRIAL_GEO_MAX_STEPS"
DEFAULT_EVERY = 10
DEFAULT_TOL = 1e-6
DEFAULT_SAMPLES = 64
CSV_NAME = "timeseries.csv"
JSON_NAME = "report.json"

KIND_PREFIXES = {
    "general": GENERAL,
    "killing": "Killing",
    "conformal": "Conformal",
    "two-metric": TWO_METRIC,
    "twometric": TWO_METRIC,
}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1, not argparse's default 2 (2 means a relation failed)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- run config

@dataclass
class RunConfig:
    system: str
    params: dict = field(default_factory=dict)
    fixture: Optional[str] = None
    q: Optional[list] = None
    v: Optional[list] = None
    dt: Optional[float] = None
    t_end: Optional[float] = None
    energy_drift_limit: Optional[float] = None
    relations: list = field(default_factory=list)
    mu: Optional[float] = None
    nu: Optional[float] = None
    tol: float = DEFAULT_TOL
    seed: int = 0
    samples: int = DEFAULT_SAMPLES
    every: int = DEFAULT_EVERY
    output: str = "virial-geo-output"
    csv_name: str = CSV_NAME
    json_name: str = JSON_NAME


def _parse_param(text):
    if "=" not in text:
        raise ConfigError(f"--param expects KEY=VALUE, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def build_run_config(args) -> RunConfig:
    """Merge the JSON config (if any) with command-line flags; flags win."""
    data = _load_json(args.config) if args.config else {}
    known = {"system", "params", "initial", "integrator", "relations", "output", "seed", "tol",
             "every", "samples"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")

    system = data.get("system")
    params = dict(data.get("params", {}))
    if isinstance(system, dict):
        params = {**system.get("params", {}), **params}
        system = system.get("name")
    if args.system:
        system = args.system
    if not system:
        raise ConfigError("no system given (use --system or the config 'system' key)")
    for text in args.param or ():
        key, value = _parse_param(text)
        params[key] = value

    cfg = RunConfig(system=system, params=params)
    initial = data.get("initial", {})
    if isinstance(initial, str):
        initial = {"fixture": initial}
    cfg.fixture = initial.get("fixture")
    cfg.q, cfg.v = initial.get("q"), initial.get("v")
    if (cfg.q is None) != (cfg.v is None):
        raise ConfigError("an explicit initial state needs both 'q' and 'v'")
    if args.fixture:
        cfg.fixture, cfg.q, cfg.v = args.fixture, None, None

    integ = data.get("integrator", {})
    cfg.dt = args.dt if args.dt is not None else integ.get("dt")
    cfg.t_end = args.t_end if args.t_end is not None else integ.get("t_end")
    cfg.energy_drift_limit = integ.get("energy_drift_limit")

    cfg.relations = list(args.relation) if args.relation else list(data.get("relations", []))
    cfg.mu, cfg.nu = args.mu, args.nu
    cfg.tol = args.tol if args.tol is not None else float(data.get("tol", DEFAULT_TOL))
    cfg.seed = args.seed if args.seed is not None else int(data.get("seed", 0))
    cfg.samples = args.samples if args.samples is not None else int(data.get("samples", DEFAULT_SAMPLES))
    cfg.every = args.every if args.every is not None else int(data.get("every", DEFAULT_EVERY))
    output = data.get("output", {})
    if isinstance(output, str):
        output = {"dir": output}
    cfg.output = args.output or output.get("dir", cfg.output)
    cfg.csv_name = output.get("csv", CSV_NAME)
    cfg.json_name = output.get("json", JSON_NAME)
    if cfg.every < 1:
        raise ConfigError("--every must be at least 1")
    if not cfg.tol > 0:
        raise ConfigError("--tol must be positive")
    return cfg


def _max_steps():
    raw = os.environ.get(MAX_STEPS_ENV)
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{MAX_STEPS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"{MAX_STEPS_ENV} must be positive")
    return value


def _resolve_initial(cfg, sid, sys_):
    if cfg.q is not None:
        try:
            state = State(cfg.q, cfg.v)
        except ValueError as exc:
            raise ConfigError(f"bad initial state: {exc}") from exc
        if state.dim != sys_.dim:
            raise ConfigError(f"initial state has dimension {state.dim}, {sid.name} needs {sys_.dim}")
        base = fixture(sid).config
        return None, state, base
    try:
        fx = fixture(sid, cfg.fixture)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None
    return fx.name, fx.state, fx.config


@dataclass
class _Requested:
    name: str
    relation: VirialRelation
    expected: Optional[str] = None


def _resolve_relations(cfg, sys_) -> List[_Requested]:
    specs = cfg.relations or [e.name for e in sys_.catalog]
    out = []
    for spec in specs:
        if isinstance(spec, dict):
            spec = dict(spec)
            kind = str(spec.pop("kind", "")).lower()
            if kind == "homogeneous":
                mu, nu = spec.get("mu", cfg.mu), spec.get("nu", cfg.nu)
                out.append(_homogeneous(mu, nu, spec.get("name", "homogeneous")))
                continue
            name = spec.get("field")
            if not name:
                raise ConfigError(f"relation {spec!r} needs a 'field'")
            text = f"{kind}:{name}" if kind else name
        else:
            text = str(spec)
        if text == "homogeneous":
            out.append(_homogeneous(cfg.mu, cfg.nu))
            continue
        kind = None
        if ":" in text:
            prefix, text = text.split(":", 1)
            if prefix.lower() not in KIND_PREFIXES:
                raise ConfigError(f"unknown relation kind {prefix!r}; use one of {', '.join(KIND_PREFIXES)}")
            kind = KIND_PREFIXES[prefix.lower()]
        try:
            entry = sys_.entry(text)
        except KeyError:
            names = ", ".join(e.name for e in sys_.catalog)
            raise ConfigError(f"{sys_.name} has no catalog field {text!r} (known: {names})") from None
        rel = VirialRelation.from_catalog(entry, kind)
        label = entry.name if kind is None else f"{kind.lower()}:{entry.name}"
        out.append(_Requested(label, rel, entry.expected))
    names = [r.name for r in out]
    if len(set(names)) != len(names):
        raise ConfigError("the same relation was requested twice")
    for r in out:
        try:
            relation_integrand(r.relation)
        except VirialGeoError as exc:
            raise ConfigError(str(exc)) from None
    return out


def _homogeneous(mu, nu, name="homogeneous"):
    if mu is None or nu is None:
        raise ConfigError("the homogeneous relation needs --mu and --nu")
    try:
        mu, nu = float(mu), float(nu)
    except (TypeError, ValueError):
        raise ConfigError("--mu and --nu must be numbers") from None
    if abs(mu + nu) < 1e-12:
        raise ConfigError("mu + nu vanishes; the energy partition is undefined")
    return _Requested(name, VirialRelation.homogeneous(mu, nu, name))


# -------------------------------------------------------------------- output

def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(sys_, traj, requested, every):
    n = sys_.dim
    header = ["t"] + [f"q{i + 1}" for i in range(n)] + [f"v{i + 1}" for i in range(n)] + ["E"]
    columns = [traj.times] + [traj.q[:, i] for i in range(n)] + [traj.v[:, i] for i in range(n)]
    columns.append(traj.energies)
    g_cols, a_cols = [], []
    for r in requested:
        if r.relation.has_virial_function:
            header.append(f"G_{r.name}")
            g_cols.append(affine_observable(r.relation.field).values(sys_, traj))
    for r in requested:
        header.append(f"A_{r.name}")
        a_cols.append(relation_integrand(r.relation).values(sys_, traj))
    table = np.column_stack(columns + g_cols + a_cols)
    rows = list(range(0, len(traj), every))
    if rows[-1] != len(traj) - 1:
        rows.append(len(traj) - 1)
    lines = [",".join(header)]
    for i in rows:
        lines.append(",".join(format(float(x), ".17g") for x in table[i]))
    return "\n".join(lines) + "\n"


def _json_text(report):
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------- evaluation

def _evaluate(sys_, traj, req: _Requested, tol):
    rel = req.relation
    if rel.kind == HOMOGENEOUS:
        part = homogeneous_partition(sys_, traj, rel.mu, rel.nu)
        integrand = part.kinetic.value_T * rel.mu - part.potential.value_T * rel.nu
        passed = part.converged and part.max_error <= tol
        return {
            "name": req.name,
            "kind": rel.kind,
            "field": None,
            "residual": _num(integrand),
            "residual_half": _num(part.kinetic.value_half * rel.mu - part.potential.value_half * rel.nu),
            "balance_check": None,
            "G_max": None,
            "decay_bound": None,
            "converged": bool(part.converged),
            "tolerance": tol,
            "verdict": "pass" if passed else "fail",
            "partition": {
                "mu": rel.mu, "nu": rel.nu, "energy": _num(part.energy),
                "avg_T": _num(part.avg_T), "avg_V": _num(part.avg_V),
                "pred_T": _num(part.pred_T), "pred_V": _num(part.pred_V),
                "max_error": _num(part.max_error),
            },
        }
    rep = virial_residual(sys_, traj, rel)
    passed = rep.converged and abs(rep.residual) <= tol
    return {
        "name": req.name,
        "kind": rel.kind,
        "field": rel.name,
        "residual": _num(rep.residual),
        "residual_half": _num(rep.residual_half),
        "balance_check": _num(rep.balance_check),
        "G_max": _num(rep.G_max),
        "decay_bound": _num(rep.decay_bound),
        "converged": bool(rep.converged),
        "tolerance": tol,
        "verdict": "pass" if passed else "fail",
    }


def _rejected_entry(req, tol):
    return {
        "name": req.name, "kind": req.relation.kind,
        "field": None if req.relation.kind == HOMOGENEOUS else req.relation.name,
        "residual": None, "residual_half": None, "balance_check": None, "G_max": None,
        "decay_bound": None, "converged": False, "tolerance": tol, "verdict": "rejected",
    }


def _classifications(sys_, requested, cfg):
    rng = np.random.default_rng(cfg.seed)
    pts = sys_.sample_points(rng, cfg.samples)
    out = {}
    for r in requested:
        if r.relation.field is None or r.expected is None:
            continue
        c = classify_vector_field(r.relation.field, sys_.metric, pts, guard=sys_.guard)
        out[r.name] = {"found": c.kind, "expected": r.expected, "max_residual": _num(c.max_residual)}
    return out


def cmd_run(args) -> int:
    cfg = build_run_config(args)
    try:
        sid = SystemId.make(cfg.system, **cfg.params)
        sys_ = build_system(sid)
    except InvalidParameter as exc:
        raise ConfigError(str(exc)) from None
    fixture_name, state, base = _resolve_initial(cfg, sid, sys_)
    requested = _resolve_relations(cfg, sys_)
    integ = dict(dt=cfg.dt or base.dt, t_end=cfg.t_end or base.t_end)
    if cfg.energy_drift_limit is not None:
        integ["energy_drift_limit"] = float(cfg.energy_drift_limit)
    max_steps = _max_steps()
    if max_steps is not None:
        integ["max_steps"] = max_steps
    try:
        icfg = IntegratorConfig(**integ)
    except InvalidParameter as exc:
        raise ConfigError(str(exc)) from None

    report = {
        "schema_version": SCHEMA_VERSION,
        "system": {"name": sid.name, "params": sid.kwargs},
        "initial": {"fixture": fixture_name, "q": state.q.tolist(), "v": state.v.tolist()},
        "integrator": {
            "method": icfg.method, "dt": icfg.dt, "effective_dt": icfg.effective_dt,
            "t_end": icfg.t_end, "steps": icfg.steps, "energy_drift_limit": icfg.energy_drift_limit,
        },
        "seed": cfg.seed,
        "samples": cfg.samples,
        "every": cfg.every,
    }
    try:
        report["classification"] = _classifications(sys_, requested, cfg)
        traj = integrate(sys_, state, icfg)
    except StepLimitExceeded as exc:
        raise ConfigError(f"{exc} (raise {MAX_STEPS_ENV} to allow more)") from None
    except GuardViolation as exc:
        report.update(status="guard-violation", rejected=True, message=str(exc),
                      energy_drift=None, all_passed=False,
                      relations=[_rejected_entry(r, cfg.tol) for r in requested])
        _write_outputs(cfg, sys_, exc.trajectory, requested, report)
        _announce(args, report)
        print(f"error: {exc}", file=sys.stderr)
        return 1

    report["energy_drift"] = _num(traj.drift)
    if traj.rejected:
        report.update(status="rejected", rejected=True, all_passed=False,
                      message=f"energy drift {traj.drift:.3e} exceeds {icfg.energy_drift_limit:.1e}",
                      relations=[_rejected_entry(r, cfg.tol) for r in requested])
        _write_outputs(cfg, sys_, traj, requested, report)
        _announce(args, report)
        return 2

    with ThreadPoolExecutor(max_workers=min(4, max(1, len(requested)))) as pool:
        entries = list(pool.map(lambda r: _evaluate(sys_, traj, r, cfg.tol), requested))
    all_passed = all(e["verdict"] == "pass" for e in entries)
    report.update(status="ok", rejected=False, message=None, relations=entries, all_passed=all_passed)
    _write_outputs(cfg, sys_, traj, requested, report)
    _announce(args, report)
    return 0 if all_passed else 2


def _write_outputs(cfg, sys_, traj, requested, report):
    if traj is not None:
        _atomic_write(os.path.join(cfg.output, cfg.csv_name), _csv_text(sys_, traj, requested, cfg.every))
    _atomic_write(os.path.join(cfg.output, cfg.json_name), _json_text(report))


def _fmt(x):
    return "-" if x is None else f"{x:.3e}"


def _announce(args, report):
    if args.json:
        sys.stdout.write(_json_text(report))
        return
    params = ", ".join(f"{k}={v}" for k, v in sorted(report["system"]["params"].items()))
    print(f"{report['system']['name']}({params})  status={report['status']}  "
          f"drift={_fmt(report.get('energy_drift'))}")
    print(f"{'relation':<28} {'kind':<21} {'residual':>11} {'balance':>11} {'conv':>5}  verdict")
    for e in report["relations"]:
        print(f"{e['name']:<28} {e['kind']:<21} {_fmt(e['residual']):>11} "
              f"{_fmt(e['balance_check']):>11} {str(e['converged']):>5}  {e['verdict']}")
        part = e.get("partition")
        if part:
            print(f"    <T>={part['avg_T']:.10g}  <V>={part['avg_V']:.10g}  "
                  f"predicted {part['pred_T']:.10g} / {part['pred_V']:.10g}")


# ------------------------------------------------------------------ classify

_PI_RE = re.compile(r"^\s*([-+]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$", re.IGNORECASE)


def parse_coordinate(text):
    """Float or a multiple of pi such as ``pi/3``, ``2pi/3`` or ``-0.5*pi``."""
    try:
        return float(text)
    except ValueError:
        pass
    m = _PI_RE.match(text)
    if not m:
        raise ConfigError(f"cannot parse coordinate {text!r}")
    coef = m.group(1)
    coef = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
    den = float(m.group(2)) if m.group(2) else 1.0
    return coef * math.pi / den


def cmd_classify(args) -> int:
    params = dict(_parse_param(p) for p in args.param or ())
    try:
        sid = SystemId.make(args.system, **params)
        sys_ = build_system(sid)
    except InvalidParameter as exc:
        raise ConfigError(str(exc)) from None
    if args.field:
        try:
            entries = [sys_.entry(args.field)]
        except KeyError:
            raise ConfigError(f"{sys_.name} has no catalog field {args.field!r}") from None
    else:
        entries = list(sys_.catalog)
    explicit = []
    for text in args.at or ():
        point = [parse_coordinate(t) for t in text.split(",")]
        if len(point) != sys_.dim:
            raise ConfigError(f"--at needs {sys_.dim} coordinates, got {len(point)}")
        explicit.append(np.array(point))
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    samples = explicit + list(sys_.sample_points(rng, args.samples))

    results = []
    for entry in entries:
        try:
            c = classify_vector_field(entry.field, sys_.metric, samples, tol=args.tol, guard=sys_.guard)
        except VirialGeoError as exc:
            raise ConfigError(str(exc)) from None
        # explicit points come first in f_samples
        rows = [{"q": q.tolist(), "f": _num(f)} for q, f in c.f_samples]
        results.append({
            "field": entry.name, "label": entry.label, "kind": c.kind, "expected": entry.expected,
            "max_residual": _num(c.max_residual), "lam": _num(c.lam), "spread": _num(c.spread),
            "samples_used": c.samples_used, "skipped": len(c.skipped),
            "table": rows if c.is_conformal else [],
        })

    if args.json:
        payload = {"system": {"name": sid.name, "params": sid.kwargs}, "coords": list(sys_.coords),
                   "results": results}
        sys.stdout.write(_json_text(payload))
        return 0
    for res in results:
        print(f"{sid}  {res['field']}  [{res['label']}]")
        extra = "" if res["lam"] is None else f"  lambda={res['lam']:.12g}"
        print(f"{res['kind']}  (expected {res['expected']})  max residual {res['max_residual']:.2e}  "
              f"samples {res['samples_used']}{extra}")
        if res["table"]:
            print("  ".join(f"{c:>14}" for c in list(sys_.coords) + ["f"]))
            for row in res["table"]:
                print("  ".join(f"{x:>14.10f}" for x in row["q"] + [row["f"]]))
        print()
    return 0


# -------------------------------------------------------------- list-systems

def list_systems():
    """Rows ``(system, params, field, aliases, expected, label)`` in a fixed order."""
    rows = []
    for name in list(DEFAULTS) + list(PRESETS):
        sid = SystemId.make(name)
        sys_ = build_system(sid)
        for e in sys_.catalog:
            rows.append({
                "system": name, "params": sid.kwargs, "coords": list(sys_.coords), "field": e.name,
                "aliases": list(e.aliases), "expected": e.expected, "label": e.label,
                "relation": VirialRelation.from_catalog(e).kind,
            })
    return rows


def cmd_list(args) -> int:
    rows = list_systems()
    if args.json:
        sys.stdout.write(_json_text(rows))
        return 0
    print(f"{'system':<16} {'field':<24} {'expected':<16} {'relation':<10} label")
    for r in rows:
        print(f"{r['system']:<16} {r['field']:<24} {r['expected']:<16} {r['relation']:<10} {r['label']}")
    return 0


# ---------------------------------------------------------------------- main

def make_parser():
    parser = _Parser(prog="virial-geo", description="Virial identities on Riemannian configuration spaces.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="integrate a system and evaluate virial relations")
    run.add_argument("--config", help="JSON run configuration; flags override it")
    run.add_argument("--system")
    run.add_argument("--param", action="append", metavar="KEY=VALUE", help="system parameter (repeatable)")
    run.add_argument("--fixture", help="named initial state (default: the system's first fixture)")
    run.add_argument("--relation", action="append",
                     help="catalog field name, KIND:NAME, or 'homogeneous' (repeatable; default: whole catalog)")
    run.add_argument("--mu", type=float, help="homogeneity degree of the metric")
    run.add_argument("--nu", type=float, help="homogeneity degree of the potential")
    run.add_argument("--dt", type=float)
    run.add_argument("--t-end", type=float, dest="t_end")
    run.add_argument("--tol", type=float, help=f"pass threshold for |residual| (default {DEFAULT_TOL})")
    run.add_argument("--seed", type=int, help="seed for classification sample points")
    run.add_argument("--samples", type=int, help=f"classification sample count (default {DEFAULT_SAMPLES})")
    run.add_argument("--every", type=int, help=f"write every k-th step to the CSV (default {DEFAULT_EVERY})")
    run.add_argument("--output", help="output directory")
    run.add_argument("--json", action="store_true", help="print the JSON report to stdout")
    run.set_defaults(handler=cmd_run)

    cls = sub.add_parser("classify", help="classify catalog vector fields")
    cls.add_argument("--system", required=True)
    cls.add_argument("--param", action="append", metavar="KEY=VALUE")
    cls.add_argument("--field", help="catalog name or alias (default: all)")
    cls.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    cls.add_argument("--seed", type=int)
    cls.add_argument("--tol", type=float)
    cls.add_argument("--at", action="append", metavar="Q1,Q2,...",
                     help="extra evaluation point, e.g. 'pi/3,0' (repeatable)")
    cls.add_argument("--json", action="store_true")
    cls.set_defaults(handler=cmd_classify)

    ls = sub.add_parser("list-systems", help="list bundled systems and their catalogs")
    ls.add_argument("--json", action="store_true")
    ls.set_defaults(handler=cmd_list)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, InvalidParameter) as exc:
        print(f"virial-geo: error: {exc}", file=sys.stderr)
        return 1
    except VirialGeoError as exc:
        print(f"virial-geo: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def report_schema():
    """The JSON schema that ``run`` reports validate against."""
    text = resources.files("virialgeo").joinpath("data/report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


if __name__ == "__main__":
    sys.exit(main())
