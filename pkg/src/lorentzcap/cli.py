"""Command-line front end.

Every command reads JSON in the schemas of the owning modules and writes a
JSON (or CSV) report.  Reports embed the input object under the same keys, so
any emitted JSON can be fed back as input.  Exit status: 0 success,
2 invalid input, 3 an inequality reported as violated.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from . import cap1d, conductor, lorentz, stepfn, twoweight, varsolve
from .cap1d import Conductor1D, ConductorUnion1D
from .conductor import ConvexPhi, PLFunction, TGrid
from .lorentz import LorentzIndex
from .stepfn import StepFunction
from .twoweight import ExponentTuple, Measure1D, SamplingSpec

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_VIOLATED = 3

COMMANDS = ("norm", "rearrange", "cap1d", "solve", "conductor-verify", "two-weight")
CSV_COLUMNS = ("case_id", "command", "lhs", "rhs", "holds", "margin", "runtime_ms")
SIG_DIGITS = 12
BRACKET_RTOL = 1e-9  # round-off slack when checking lower <= upper


class InputError(ValueError):
    """Unreadable or invalid input; maps to exit status 2."""


@dataclass
class RunConfig:
    command: str
    input: Any = None  # parsed JSON object
    input_path: str | None = None
    p: float | None = None
    q: float | None = None
    r: float | None = None
    s: float | None = None
    a: float | None = None
    phi: str = "id"
    kind: str = "lorentz"
    conductor: dict | None = None
    nodes: int = 2001
    max_iters: int = 2000
    tol: float = 1e-6
    seed: int = 0
    per_decade: int = 256
    decades: float = 6.0
    grid: tuple[int, int, int] = (50, 50, 50)
    output: str = "json"
    case_id: str = ""
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        needs_idx = self.command in ("norm", "cap1d", "solve", "conductor-verify", "two-weight")
        if needs_idx and (self.p is None or self.q is None):
            raise InputError(f"{self.command} needs --p and --q")
        if needs_idx:
            try:
                LorentzIndex(self.p, self.q)
            except ValueError as exc:
                raise InputError(str(exc)) from None
        if self.command in ("solve", "conductor-verify") and math.isinf(self.q):
            raise InputError(f"{self.command} does not accept q = inf")
        if self.command == "conductor-verify" and (self.a is None or self.a <= 1):
            raise InputError("conductor-verify needs --a > 1")
        if self.command == "two-weight":
            if self.r is None or self.s is None:
                raise InputError("two-weight needs --r and --s")
            try:
                ExponentTuple(self.p, self.q, self.r, self.s)
            except ValueError as exc:
                raise InputError(str(exc)) from None
        if self.command == "norm" and self.kind not in ("lorentz", "starstar", "distribution"):
            raise InputError(f"unknown norm kind {self.kind!r}")
        if self.output not in ("json", "csv"):
            raise InputError("output format must be json or csv")


def _num(x):
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return float(f"{x:.{SIG_DIGITS}g}")
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    return _num(obj)


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True)


def load_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read input: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None


def _parse_q(v) -> float:
    if isinstance(v, str):
        return float(v.strip().lower())
    return float(v)


def _input(cfg: RunConfig):
    if cfg.input is None:
        raise InputError(f"{cfg.command} needs --input")
    return cfg.input


def _conductor_from(cfg: RunConfig):
    if cfg.conductor is not None:
        return Conductor1D.from_json(cfg.conductor)
    obj = _input(cfg)
    if "omega" in obj and "K" in obj:
        return ConductorUnion1D.from_json(obj)
    return Conductor1D.from_json(obj)


def _bracket_summary(lower, upper):
    return {"lhs": lower, "rhs": upper, "holds": lower <= upper * (1 + BRACKET_RTOL), "margin": upper - lower}


def _cmd_norm(cfg):
    obj = _input(cfg)
    f = StepFunction.from_json(obj)
    idx = LorentzIndex(cfg.p, cfg.q)
    if cfg.kind == "lorentz":
        value = lorentz.quasinorm(f, idx)
    elif cfg.kind == "starstar":
        value = lorentz.norm_starstar(f, idx)
    else:
        value = lorentz.quasinorm_via_distribution(f, idx)
    report = {**f.to_json(), "p": idx.p, "q": idx.q, "kind": cfg.kind, "value": value}
    return report, {"lhs": value}


def _cmd_rearrange(cfg):
    f = StepFunction.from_json(_input(cfg))
    return stepfn.rearrangement(f).to_json(), {}


def _cmd_cap1d(cfg):
    c = _conductor_from(cfg)
    idx = LorentzIndex(cfg.p, cfg.q)
    if isinstance(c, Conductor1D):
        lower, upper = cap1d.cap_lower(c, idx), cap1d.cap_upper(c, idx)
        report = {**c.to_json(), "lower": lower, "upper": upper}
        if idx.q == idx.p:
            report["exact"] = cap1d.exact_p_cap(c, idx.p)
    else:
        lower, upper = cap1d.cap_union(c, idx)
        report = {**c.to_json(), "lower": lower, "upper": upper}
    report.update(p=idx.p, q=idx.q)
    return report, _bracket_summary(lower, upper)


def _cmd_solve(cfg):
    c = _conductor_from(cfg)
    u = ConductorUnion1D.single(c) if isinstance(c, Conductor1D) else c
    prob = varsolve.GridProblem(
        u, cfg.nodes, LorentzIndex(cfg.p, cfg.q), tol=cfg.tol, max_iters=cfg.max_iters, seed=cfg.seed
    )
    res = varsolve.solve_cap(prob)
    report = {**c.to_json(), **res.to_json(), "p": cfg.p, "q": cfg.q, "nodes": cfg.nodes, "seed": cfg.seed}
    return report, _bracket_summary(*res.bracket)


def _cmd_conductor(cfg):
    f = PLFunction.from_json(_input(cfg))
    phi = ConvexPhi.parse(cfg.phi)
    rep = conductor.verify_conductor(
        f, cfg.a, LorentzIndex(cfg.p, cfg.q), phi, TGrid(cfg.per_decade, cfg.decades)
    )
    report = {**f.to_json(), **rep.to_json(), "a": cfg.a, "p": cfg.p, "q": cfg.q, "phi": phi.spec()}
    return report, {"lhs": rep.lhs, "rhs": rep.rhs, "holds": rep.holds, "margin": rep.margin}


def _cmd_two_weight(cfg):
    obj = _input(cfg)
    try:
        mu = Measure1D.from_json(obj["mu"])
        nu = Measure1D.from_json(obj["nu"])
        omega = tuple(obj["omega"])
    except KeyError as exc:
        raise InputError(f"two-weight input is missing key {exc}") from None
    ex = ExponentTuple(cfg.p, cfg.q, cfg.r, cfg.s)
    report = dict(obj)
    grid = obj.get("points") or SamplingSpec(*cfg.grid)
    report["K_est"] = twoweight.criterion_K(mu, nu, omega, ex, grid)
    corpus = [PLFunction.from_json(g) for g in obj.get("corpus", [])]
    report["A_est"] = twoweight.inequality_A(mu, nu, omega, ex, corpus)
    if obj.get("conductors"):
        pairs = [ConductorUnion1D.from_json(u) for u in obj["conductors"]]
        report["general_K_est"] = twoweight.general_criterion_K(mu, nu, pairs, ex, omega=omega)
    report.update(p=ex.p, q=ex.q, r=ex.r, s=ex.s)
    return report, {"lhs": report["A_est"], "rhs": report["K_est"]}


_DISPATCH = {
    "norm": _cmd_norm,
    "rearrange": _cmd_rearrange,
    "cap1d": _cmd_cap1d,
    "solve": _cmd_solve,
    "conductor-verify": _cmd_conductor,
    "two-weight": _cmd_two_weight,
}


def execute(cfg: RunConfig) -> tuple[dict, dict]:
    """Validate and run one configuration; returns ``(report, csv summary)``."""
    cfg.validate()
    try:
        return _DISPATCH[cfg.command](cfg)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(str(exc)) from None


def _status(summary: dict) -> int:
    return EXIT_VIOLATED if summary.get("holds") is False else EXIT_OK


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(_clean(v))


def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: _csv_cell(row.get(k)) for k in CSV_COLUMNS})
    return buf.getvalue()


def config_from_mapping(case: dict, base_dir: Path | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from a batch manifest entry."""
    if "command" not in case:
        raise InputError("manifest case needs a 'command'")
    args = dict(case.get("args", {}))
    cfg = RunConfig(command=case["command"], case_id=str(case.get("case_id", "")))
    if "input" in case:
        cfg.input = case["input"]
    elif "input_path" in case:
        path = Path(case["input_path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        cfg.input = load_json(str(path))
    for key, val in args.items():
        key = key.replace("-", "_")
        if key == "q":
            val = _parse_q(val)
        elif key in ("p", "r", "s", "a", "tol", "decades"):
            val = float(val)
        elif key in ("nodes", "max_iters", "seed", "per_decade"):
            val = int(val)
        elif key == "grid":
            val = tuple(int(v) for v in val)
        if key == "conductor" or hasattr(cfg, key):
            setattr(cfg, key, val)
        else:
            raise InputError(f"unknown argument {key!r} in case {cfg.case_id!r}")
    return cfg


def run_batch(manifest: dict, workers: int = 1, timing: bool = False, base_dir: Path | None = None):
    cases = manifest.get("cases")
    if not isinstance(cases, list):
        raise InputError("manifest needs a 'cases' list")

    def one(item):
        i, case = item
        t0 = time.perf_counter()
        try:
            cfg = config_from_mapping(case, base_dir)
            if not cfg.case_id:
                cfg.case_id = str(i)
            report, summary = execute(cfg)
            status = "violated" if summary.get("holds") is False else "ok"
            err = None
        except InputError as exc:
            cfg = None
            report, summary, status, err = None, {}, "invalid", str(exc)
        elapsed = (time.perf_counter() - t0) * 1e3
        row = {
            "case_id": case.get("case_id", str(i)),
            "command": case.get("command", ""),
            **{k: summary.get(k) for k in ("lhs", "rhs", "holds", "margin")},
            "runtime_ms": round(elapsed, 3) if timing else None,
        }
        result = {"case_id": row["case_id"], "command": row["command"], "status": status}
        if report is not None:
            result["report"] = report
        if err is not None:
            result["error"] = err
        return result, row

    items = list(enumerate(cases))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(one, items))
    else:
        out = [one(it) for it in items]
    results = [r for r, _ in out]
    rows = [row for _, row in out]
    counts = {s: sum(1 for r in results if r["status"] == s) for s in ("ok", "violated", "invalid")}
    report = {"cases": cases, "results": results, "summary": {"passed": counts["ok"], "failed": counts["violated"], "invalid": counts["invalid"]}}
    if counts["invalid"]:
        code = EXIT_INVALID
    elif counts["violated"]:
        code = EXIT_VIOLATED
    else:
        code = EXIT_OK
    return report, rows, code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lorentzcap",
        description="Lorentz quasinorms, 1-D p,q-capacitances and conductor-inequality checks.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, idx=True):
        sp.add_argument("--input", help="input JSON file")
        sp.add_argument("--format", dest="output", choices=("json", "csv"), default="json")
        if idx:
            sp.add_argument("--p", type=float)
            sp.add_argument("--q", type=_parse_q, help="secondary index; 'inf' allowed where supported")

    sp = sub.add_parser("norm", help="Lorentz quasinorm of a step function")
    common(sp)
    sp.add_argument("--kind", choices=("lorentz", "starstar", "distribution"), default="lorentz")

    sp = sub.add_parser("rearrange", help="nonincreasing rearrangement of a step function")
    common(sp, idx=False)

    for name, hlp in (("cap1d", "capacitance bracket"), ("solve", "grid capacitance solve")):
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        for flag in ("A", "a", "b", "B"):
            sp.add_argument(f"--{flag}", dest=f"c_{flag}", type=float)
        if name == "solve":
            sp.add_argument("--nodes", type=int, default=2001)
            sp.add_argument("--max-iters", type=int, default=2000)
            sp.add_argument("--tol", type=float, default=1e-6)
            sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("conductor-verify", help="check the conductor inequality for a PL function")
    common(sp)
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--phi", default="id", help="id | square | power:<beta> | pl:<x>/<y>,...")
    sp.add_argument("--per-decade", type=int, default=256)
    sp.add_argument("--decades", type=float, default=6.0)

    sp = sub.add_parser("two-weight", help="estimate the two-weight constants K and A")
    common(sp)
    sp.add_argument("--r", type=float)
    sp.add_argument("--s", type=float)
    sp.add_argument("--grid", type=int, nargs=3, default=(50, 50, 50), metavar=("NX", "ND", "NTAU"))

    sp = sub.add_parser("batch", help="run a manifest of cases")
    sp.add_argument("manifest")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--format", dest="output", choices=("json", "csv"), default="json")
    sp.add_argument("--timing", action="store_true", help="fill runtime_ms (makes output run-dependent)")
    return parser


def _config_from_args(ns) -> RunConfig:
    cfg = RunConfig(command=ns.command, output=ns.output)
    if ns.input:
        cfg.input_path = ns.input
        cfg.input = load_json(ns.input)
    for key in ("p", "q", "r", "s", "a", "phi", "kind", "nodes", "max_iters", "tol", "seed", "per_decade", "decades"):
        if hasattr(ns, key):
            setattr(cfg, key, getattr(ns, key))
    if hasattr(ns, "grid"):
        cfg.grid = tuple(ns.grid)
    flags = {k: getattr(ns, f"c_{k}", None) for k in ("A", "a", "b", "B")}
    if any(v is not None for v in flags.values()):
        if any(v is None for v in flags.values()):
            raise InputError("give all of --A --a --b --B or none")
        cfg.conductor = flags
    return cfg


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, stream=stderr)
    try:
        if ns.command == "batch":
            manifest = load_json(ns.manifest)
            report, rows, code = run_batch(
                manifest, ns.workers, ns.timing, base_dir=Path(ns.manifest).parent
            )
            stdout.write(_csv(rows) if ns.output == "csv" else dumps(report) + "\n")
            return code
        cfg = _config_from_args(ns)
        report, summary = execute(cfg)
    except InputError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    if cfg.output == "csv":
        stdout.write(_csv([{"case_id": "", "command": cfg.command, **summary}]))
    else:
        stdout.write(dumps(report) + "\n")
    return _status(summary)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
