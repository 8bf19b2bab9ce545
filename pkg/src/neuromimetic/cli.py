"""Command-line driver: ``neuromimetic <command> [--config PATH] [--seed N] [--out DIR] [--format json|csv]``.

Every run writes one ``<command>.report.json`` into the output directory.
The ``payload`` member depends only on the configuration and the seed, so two
runs with the same inputs produce byte-identical payloads.  Exit status is 0
on success, 2 for configuration or usage errors and 3 when a tolerance or
invariant check fails.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import experiments, golden, svg
from .alphabet import (
    activation_entropy,
    alphabet_entropy,
    alphabet_to_json,
    build_alphabet,
    enumerate_patterns,
    nonzero_entries,
)
from .dqn import DqnHyper, dqn_select
from .emulation import (
    EmulationConfig,
    brute_force_select,
    candidate_entries,
    circle_points,
    direction_field,
    hebb_learn,
    partition_circle,
    partition_sphere_mc,
)
from .errors import NeuromimeticError
from .linalg import IndexSet, all_n_minors_nonzero, matrix_from_json, matrix_to_json
from .resilient import DropoutSchedule, design_gains, simulate_cascade, verify_resilience

EXIT_OK, EXIT_CONFIG, EXIT_FAILURE = 0, 2, 3
U64_MAX = 2**64 - 1


class ConfigError(Exception):
    """Missing, unreadable or inconsistent configuration."""


class ToleranceFailure(Exception):
    """A computed quantity missed its reference; ``payload`` is still reported."""

    def __init__(self, message, payload):
        super().__init__(message)
        self.payload = payload


# ---------------------------------------------------------------------------
# configuration


def load_config(path: str | None) -> tuple[dict, Path]:
    if path is None:
        return {}, Path.cwd()
    p = Path(path)
    try:
        cfg = json.loads(p.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg, p.resolve().parent


def bundled_fixture() -> dict:
    return json.loads(resources.files("neuromimetic").joinpath("data/design_fixture.json").read_text())


def _read_matrix_file(path: Path) -> np.ndarray:
    if not path.exists():
        raise ConfigError(f"matrix file not found: {path}")
    try:
        if path.suffix == ".json":
            return _parse_matrix(json.loads(path.read_text()), path.parent, str(path))
        return np.atleast_2d(np.loadtxt(path, delimiter="," if path.suffix == ".csv" else None))
    except ValueError as exc:  # JSONDecodeError is a ValueError
        raise ConfigError(f"cannot read matrix file {path}: {exc}") from exc


def _parse_matrix(value, base: Path, name: str) -> np.ndarray:
    if isinstance(value, str):
        return _read_matrix_file(base / value)
    if isinstance(value, dict):
        if "file" in value:
            return _read_matrix_file(base / value["file"])
        try:
            return matrix_from_json(value)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"matrix {name}: {exc}") from exc
    try:
        M = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"matrix {name} is not numeric") from exc
    if M.ndim != 2:
        raise ConfigError(f"matrix {name} must be two-dimensional")
    return M


def get_matrix(cfg: dict, base: Path, key: str, default=None, required: bool = True):
    if key not in cfg:
        if default is not None:
            return np.asarray(default, dtype=float)
        if required:
            raise ConfigError(f"missing matrix {key}")
        return None
    return _parse_matrix(cfg[key], base, key)


def get_index_set(cfg: dict, key: str, universe: int) -> IndexSet:
    if key not in cfg:
        raise ConfigError(f"missing index set {key}")
    try:
        return IndexSet.of(universe, cfg[key])
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"index set {key}: {exc}") from exc


def get_vector(cfg: dict, key: str, n: int, default=None) -> np.ndarray:
    v = np.asarray(cfg.get(key, default), dtype=float)
    if v.shape != (n,):
        raise ConfigError(f"{key} must have length {n}")
    return v


def emulation_config(cfg: dict, base: Path, args) -> EmulationConfig:
    B = golden.NON_REDUNDANT_B if getattr(args, "non_redundant", False) else golden.SIMPLE_B
    H = get_matrix(cfg, base, "H", golden.EXAMPLE_H)
    B = get_matrix(cfg, base, "B", B)
    try:
        return EmulationConfig(
            H, B,
            h=float(cfg.get("h", 0.1)),
            wt=float(cfg.get("wt", 1.0)),
            loss_kind=cfg.get("loss_kind", "norm_diff"),
            target_kind=cfg.get("target_kind", "first_order"),
            scale_input_by_h=bool(cfg.get("scale_input_by_h", True)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def system_matrices(cfg: dict, base: Path):
    A = get_matrix(cfg, base, "A")
    B = get_matrix(cfg, base, "B")
    C = get_matrix(cfg, base, "C")
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[0] != n or C.shape[1] != n:
        raise ConfigError(f"inconsistent shapes A {A.shape}, B {B.shape}, C {C.shape}")
    I1 = get_index_set(cfg, "I1", B.shape[1])
    I2 = get_index_set(cfg, "I2", C.shape[0])
    return A, B, C, I1, I2


def _schedule(cfg: dict, m: int, q: int, T: float) -> DropoutSchedule:
    sched = cfg.get("schedule")
    if sched is None:
        raise ConfigError("missing schedule")
    try:
        if "intervals" in sched:
            return DropoutSchedule([
                (float(iv["t0"]), float(iv["t1"]), IndexSet.of(m, iv["L1"]), IndexSet.of(q, iv["L2"]))
                for iv in sched["intervals"]
            ])
        phases = [(IndexSet.of(m, ph["L1"]), IndexSet.of(q, ph["L2"])) for ph in sched["phases"]]
        return DropoutSchedule.cyclic(phases, float(sched["period"]), T)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad schedule: {exc}") from exc


def _hyper(cfg: dict, seed: int) -> DqnHyper:
    try:
        return DqnHyper(seed=seed, **cfg.get("hyper", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad hyperparameters: {exc}") from exc


# ---------------------------------------------------------------------------
# output helpers


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def partition_csv(cells: list[dict]) -> str:
    rows = [[c.get("theta_lo", ""), c.get("theta_hi", ""), *c["d"], c["alpha"], c["p"]] for c in cells]
    n = len(cells[0]["d"]) if cells else 2
    names = ["d_x", "d_y"] if n == 2 else [f"d_{i + 1}" for i in range(n)]
    return _csv(["theta_lo", "theta_hi", *names, "alpha", "p"], rows)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, IndexSet):
        return obj.to_json()
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=1, allow_nan=True)


class Run:
    """Collects artifacts for one command and writes the report."""

    def __init__(self, args, cfg: dict):
        self.args = args
        self.out = Path(args.out)
        self.artifacts: list[str] = []
        digest_src = canonical_json({"command": args.command, "config": cfg, "seed": args.seed,
                                     "options": _options(args)})
        self.digest = hashlib.sha256(digest_src.encode()).hexdigest()

    def write(self, name: str, text: str):
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / name).write_text(text)
        self.artifacts.append(name)

    def report(self, payload, wall: float, status: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / f"{self.args.command}.report.json"
        body = {
            "command": self.args.command,
            "config_digest": self.digest,
            "status": status,
            "wall_time": wall,
            "payload": _jsonable(payload),
            "artifacts": sorted(self.artifacts),
        }
        path.write_text(canonical_json(body) + "\n")
        return path


def _options(args) -> dict:
    skip = {"func", "config", "out", "format", "seed", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def payload_digest(report_path) -> str:
    """Digest of the payload member of a report (wall time excluded)."""
    body = json.loads(Path(report_path).read_text())
    return hashlib.sha256(canonical_json(body["payload"]).encode()).hexdigest()


# ---------------------------------------------------------------------------
# commands


def _design_payload(cfg, base, args, run):
    if not cfg:
        cfg = bundled_fixture()
    A, B, C, I1, I2 = system_matrices(cfg, base)
    minors = {}
    for name, M in (("B", B), ("C", C)):
        rep = all_n_minors_nonzero(M, float(cfg.get("minor_tol", 1e-9)))
        minors[name] = {"ok": rep.ok, "worst_det": rep.worst_det, "worst_set": rep.worst_set.to_json()}
        if not rep.ok:
            msg = f"minor check failed for {name}: |det| = {rep.worst_det:.3e} on {rep.worst_set.to_json()}"
            if args.strict_minors:
                raise NeuromimeticError(msg)
            print(f"warning: {msg}", file=sys.stderr)
    try:
        design = design_gains(A, B, C, I1, I2, float(cfg.get("alpha1", 1.0)), float(cfg.get("alpha2", 1.0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    report = verify_resilience(design, margin=float(getattr(args, "margin", 0.0)), seed=args.seed)
    payload = {
        "K": matrix_to_json(design.K),
        "E": matrix_to_json(design.E),
        "hatA1": matrix_to_json(design.hatA1.hat_A),
        "hatA2": matrix_to_json(design.hatA2.hat_A),
        "I1": I1.to_json(),
        "I2": I2.to_json(),
        "minors": minors,
        "resilience": report.to_json(),
    }
    return cfg, design, report, payload


def cmd_design(cfg, base, args, run):
    _, _, report, payload = _design_payload(cfg, base, args, run)
    if report.failures:
        raise ToleranceFailure(f"{len(report.failures)} lattice pairs are not Hurwitz", payload)
    return payload


def cmd_verify(cfg, base, args, run):
    _, _, report, payload = _design_payload(cfg, base, args, run)
    payload = {"resilience": payload["resilience"], "minors": payload["minors"]}
    if report.failures:
        raise ToleranceFailure(f"{len(report.failures)} lattice pairs have abscissa >= -{args.margin}", payload)
    return payload


def cmd_simulate(cfg, base, args, run):
    cfg, design, _, _ = _design_payload(cfg, base, args, run)
    n = design.n
    T = float(cfg.get("T", 20.0))
    h = float(cfg.get("h", 0.05))
    schedule = _schedule(cfg, design.B.shape[1], design.C.shape[0], T)
    x0 = get_vector(cfg, "x0", n, np.ones(n))
    z0 = get_vector(cfg, "z0", n, np.zeros(n))
    try:
        traj = simulate_cascade(design, schedule, x0, z0, h, T)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    e = np.linalg.norm(traj.e, axis=1)
    ratio = float(e[-1] / e[0]) if e[0] > 0 else 0.0
    if args.format == "csv":
        run.write("trajectory.csv", traj.to_csv())
    else:
        run.write("trajectory.json", canonical_json({"t": traj.times, "x": traj.x, "z": traj.z}))
    return {"samples": len(traj.times), "T": T, "e0": float(e[0]), "eT": float(e[-1]), "e_ratio": ratio,
            "xT": traj.x[-1], "zT": traj.z[-1]}


def cmd_alphabet(cfg, base, args, run):
    B = get_matrix(cfg, base, "B", golden.NON_REDUNDANT_B if args.non_redundant else golden.SIMPLE_B)
    try:
        alphabet = build_alphabet(B, enumerate_patterns(B.shape[1], binary_only=args.binary))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    entries = alphabet_to_json(alphabet)
    if args.format == "csv":
        n = B.shape[0]
        rows = [[*e["d"], e["alpha"], " ".join("".join(f"{v:+d}" for v in u) for u in e["preimages"])]
                for e in entries]
        run.write("alphabet.csv", _csv([f"d_{i + 1}" for i in range(n)] + ["alpha", "preimages"], rows))
    return {
        "patterns": sum(e.multiplicity for e in alphabet),
        "distinct": len(alphabet),
        "nonzero": len(nonzero_entries(alphabet)),
        "entries": entries,
    }


def cmd_entropy(cfg, base, args, run):
    if "p" in cfg:
        p, alpha = cfg["p"], cfg.get("alpha")
        if alpha is None or len(alpha) != len(p):
            raise ConfigError("entropy needs p and alpha of equal length")
    else:
        cells = experiments.reproduce_table1(compare=False)["cells"]
        p, alpha = [c["p"] for c in cells], [c["alpha"] for c in cells]
    try:
        return {"p": p, "alpha": alpha, "alphabet_entropy": alphabet_entropy(p),
                "activation_entropy": activation_entropy(p, alpha)}
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_partition(cfg, base, args, run):
    ecfg = emulation_config(cfg, base, args)
    alphabet = build_alphabet(ecfg.B, enumerate_patterns(ecfg.B.shape[1]))
    if ecfg.n == 2:
        cells = partition_circle(ecfg, alphabet, resolution=int(cfg.get("resolution", 4096)),
                                 learner=args.learner or cfg.get("learner", "oracle"))
    else:
        cells = partition_sphere_mc(ecfg, alphabet, samples=int(cfg.get("samples", 100_000)), seed=args.seed)
    table = [c.to_json() for c in cells]
    p, alpha = [c.measure for c in cells], [c.alpha for c in cells]
    if args.format == "csv":
        run.write("partition.csv", partition_csv(table))
    return {"cells": table, "alphabet_entropy": alphabet_entropy(p), "activation_entropy": activation_entropy(p, alpha)}


def cmd_learn(cfg, base, args, run):
    ecfg = emulation_config(cfg, base, args)
    alphabet = build_alphabet(ecfg.B, enumerate_patterns(ecfg.B.shape[1]))
    learner = args.learner or cfg.get("learner", "hebb")
    alpha = float(cfg.get("alpha", 0.0))
    if args.grid:
        thetas = experiments.circle_grid(args.grid)
        if learner == "dqn":
            sweep = experiments.dqn_sweep(ecfg, args.grid, seed=args.seed, retries=int(cfg.get("retries", 3)),
                                          hyper_kwargs=cfg.get("hyper"))
            if args.format == "csv":
                rows = [[r["theta"], *(r["chosen"] or ["", ""]), r["runs"]] for r in sweep["records"]]
                run.write("field.csv", _csv(["theta", "d_x", "d_y", "runs"], rows))
            return {k: v for k, v in sweep.items()} | {"learner": learner}
        field = direction_field(ecfg, alphabet, thetas, learner, alpha)
        points = circle_points(thetas)
        if args.format == "csv":
            run.write("field.csv", _csv(["theta", "x", "y", "d_x", "d_y"],
                                        [[t, *x, *d] for t, x, d in zip(thetas, points, field)]))
        return {"learner": learner, "points": points, "directions": field}
    x0 = get_vector(cfg, "x0", ecfg.n, golden.FIG2_POINT if ecfg.n == 2 else None)
    entries = candidate_entries(alphabet, ecfg.H)
    oracle = brute_force_select(ecfg, x0, entries)
    out = {"learner": learner, "x0": x0, "oracle_directions": oracle.directions}
    if learner == "hebb":
        sel = hebb_learn(ecfg, x0, alphabet, alpha=alpha, record=True)
        out |= {
            "directions": sel.selection.directions,
            "patterns": sel.winner_patterns,
            "iterations": sel.result.state.iteration,
            "converged": sel.result.converged,
            "tie": sel.result.tie,
            "history": sel.result.history,
        }
    elif learner == "dqn":
        res = dqn_select(ecfg, x0, alphabet, _hyper(cfg, args.seed))
        out |= {"directions": [res.direction], "tie_set": res.tie_set, "pattern": res.pattern,
                "phases": res.diagnostics["phases"], "kappa": res.diagnostics["kappa"],
                "episodes": res.diagnostics["episodes"]}
    elif learner == "oracle":
        out |= {"directions": oracle.directions, "patterns": oracle.patterns}
    else:
        raise ConfigError(f"unknown learner {learner!r}")
    return out


def cmd_reproduce_table1(cfg, base, args, run):
    B = golden.NON_REDUNDANT_B if args.non_redundant else None
    result = experiments.reproduce_table1(B=B, resolution=int(cfg.get("resolution", 4096)),
                                          learner=cfg.get("learner", "oracle"), compare=not args.non_redundant)
    run.write("table1.csv", partition_csv(result["cells"]))
    if args.non_redundant:
        return result
    diff = result["diff"]
    run.write("table1_diff.csv", _csv(["quantity", "expected", "observed", "tol", "ok"],
                                      [[d["quantity"], d["expected"], d["observed"], d["tol"], d["ok"]] for d in diff]))
    bad = [d["quantity"] for d in diff if not d["ok"]]
    if bad:
        raise ToleranceFailure("outside tolerance: " + ", ".join(bad), result)
    return result


def cmd_dropout_relearn(cfg, base, args, run):
    ecfg = emulation_config(cfg, base, args)
    m = ecfg.B.shape[1]
    if args.channel == "all":
        channels = list(range(1, m + 1))
    else:
        try:
            channels = [int(args.channel)]
        except ValueError as exc:
            raise ConfigError(f"channel must be an integer or 'all', got {args.channel!r}") from exc
        if not 1 <= channels[0] <= m:
            raise ConfigError(f"channel index {channels[0]} out of range 1..{m}")
    return experiments.dropout_relearn(ecfg, channels, points=int(cfg.get("points", 360)),
                                       learner=cfg.get("learner", "hebb"))


def _read_plot_input(path: Path):
    if not path.exists():
        raise ConfigError(f"plot input not found: {path}")
    text = path.read_text()
    if path.suffix == ".csv":
        rows = list(csv.DictReader(io.StringIO(text)))
        return {"csv": rows}
    try:
        body = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"plot input is not valid JSON: {exc}") from exc
    return body.get("payload", body) if isinstance(body, dict) else {"csv": body}


def cmd_plot(cfg, base, args, run):
    if not args.input:
        raise ConfigError("plot needs an input file")
    data = _read_plot_input(Path(args.input))
    try:
        if args.kind == "partition":
            cells = data.get("cells")
            if cells is None:
                cells = [{"d": [float(r["d_x"]), float(r["d_y"])], "theta_lo": float(r["theta_lo"]),
                          "theta_hi": float(r["theta_hi"])} for r in data["csv"]]
            text = svg.partition_svg(cells, golden.EXAMPLE_H)
            count = len(cells)
        elif args.kind == "quiver":
            if "csv" in data:
                pts = [[float(r["x"]), float(r["y"])] for r in data["csv"]]
                dirs = [[float(r["d_x"]), float(r["d_y"])] for r in data["csv"]]
            else:
                pts, dirs = data["points"], data["directions"]
            text = svg.quiver_svg(pts, dirs, golden.EXAMPLE_H)
            count = len(pts)
        elif args.kind == "weights":
            history = data.get("history") or []
            text = svg.weights_svg(history)
            count = len(history)
        else:
            rows = data["csv"] if "csv" in data else []
            if "t" in data:
                times = data["t"]
                cols = {f"x{i + 1}": [r[i] for r in data["x"]] for i in range(len(data["x"][0]))} if data["x"] else {}
            else:
                times = [float(r["t"]) for r in rows]
                keys = [k for k in (rows[0].keys() if rows else []) if k != "t"]
                cols = {k: [float(r[k]) for r in rows] for k in keys}
            text = svg.trajectory_svg(times, cols)
            count = len(times)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"plot input does not match kind {args.kind!r}: {exc}") from exc
    name = f"{args.kind}.svg"
    run.write(name, text)
    return {"kind": args.kind, "items": count, "sha256": hashlib.sha256(text.encode()).hexdigest()}


COMMANDS = {
    "design": cmd_design,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "alphabet": cmd_alphabet,
    "entropy": cmd_entropy,
    "partition": cmd_partition,
    "learn": cmd_learn,
    "reproduce-table1": cmd_reproduce_table1,
    "dropout-relearn": cmd_dropout_relearn,
    "plot": cmd_plot,
}


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from exc
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=_seed, default=0, help="root seed (unsigned 64-bit)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="format of tabular artifacts")

    parser = argparse.ArgumentParser(prog="neuromimetic", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("design", parents=[common], help="design resilient gains and check the lattice")
    p.add_argument("--strict-minors", action="store_true", help="treat a singular maximal minor as an error")
    p = sub.add_parser("verify", parents=[common], help="spectral check over the dropout lattices")
    p.add_argument("--strict-minors", action="store_true")
    p.add_argument("--margin", type=float, default=0.0, help="require abscissa below -margin")
    p = sub.add_parser("simulate", parents=[common], help="simulate plant and observer under a dropout schedule")
    p.add_argument("--strict-minors", action="store_true")
    for name, text in (("alphabet", "enumerate the quantization alphabet"),
                       ("entropy", "alphabet and activation-pattern entropies"),
                       ("partition", "partition the sphere by optimal direction")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--non-redundant", action="store_true", help="use the non-redundant example B")
        if name == "alphabet":
            p.add_argument("--binary", action="store_true", help="patterns over {0, 1} only")
        if name == "partition":
            p.add_argument("--learner", choices=("oracle", "hebb"))
    p = sub.add_parser("learn", parents=[common], help="learn the optimal direction at x0 or on a circle grid")
    p.add_argument("--learner", "--algorithm", dest="learner", choices=("oracle", "hebb", "dqn"))
    p.add_argument("--grid", type=int, default=0, help="number of circle grid points (0: single x0)")
    p.add_argument("--non-redundant", action="store_true")
    p = sub.add_parser("reproduce-table1", parents=[common], help="reproduce the example partition table")
    p.add_argument("--non-redundant", action="store_true", help="use the non-redundant B (no comparison)")
    p = sub.add_parser("dropout-relearn", parents=[common], help="relearn the field with one channel silenced")
    p.add_argument("--channel", default="all", help="channel index (1-based) or 'all'")
    p.add_argument("--non-redundant", action="store_true")
    p = sub.add_parser("plot", parents=[common], help="render an SVG from a report or CSV")
    p.add_argument("input", nargs="?", help="report JSON or CSV file")
    p.add_argument("--kind", choices=("quiver", "partition", "weights", "trajectory"), required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        cfg, base = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        cfg, base, failed = {}, Path.cwd(), exc
    else:
        failed = None
        if "seed" in cfg and args.seed == 0:
            args.seed = _seed(str(cfg["seed"]))
        if args.out == "out" and "out" in cfg:
            args.out = str(base / cfg["out"])
    run = Run(args, cfg)
    code, status = EXIT_OK, "ok"
    try:
        if failed is not None:
            raise failed
        payload = COMMANDS[args.command](cfg, base, args, run)
    except ConfigError as exc:
        if failed is None:
            print(f"config error: {exc}", file=sys.stderr)
        payload, code, status = {"error": "ConfigError", "message": str(exc)}, EXIT_CONFIG, "config error"
    except (ValueError, IndexError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        payload, code, status = {"error": type(exc).__name__, "message": str(exc)}, EXIT_CONFIG, "config error"
    except ToleranceFailure as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        payload, code, status = exc.payload, EXIT_FAILURE, f"failed: {exc}"
    except NeuromimeticError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        payload, code, status = {"error": type(exc).__name__, "message": str(exc)}, EXIT_FAILURE, "failed"
    path = run.report(payload, time.perf_counter() - start, status)
    print(path)
    return code


if __name__ == "__main__":
    sys.exit(main())
