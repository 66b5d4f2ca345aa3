"""
Command line front end.

    fuzzyheat solve PROBLEM        crisp VIM solve at the parameter peaks
    fuzzyheat classify PROBLEM     BFS / Seikkala verdict with its evidence
    fuzzyheat envelope PROBLEM     alpha-cut bands at chosen points
    fuzzyheat reproduce ID         run a registered example against its oracle

Every command writes its artifacts to ``--out`` and finishes with
``manifest.json``.  Exit codes: 0 success, 2 I/O, 3 parse or validation,
4 numerical failure, 5 oracle mismatch.
"""
import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from fuzzyheat import __version__, expr
from fuzzyheat.bfs import classify
from fuzzyheat.errors import AcceptanceError, FuzzyHeatError, NumericalError, UsageError
from fuzzyheat.grid import GridFunction, sup_norm_diff
from fuzzyheat.problem import crisp_core, endpoint_environment, read_problem
from fuzzyheat.registry import example_ids, load_example
from fuzzyheat.signs import SamplingConfig
from fuzzyheat.ss import SsConfig, example4_boundary, solve_levels
from fuzzyheat.vim import VimConfig, solve_crisp

logger = logging.getLogger(__name__)

DIGITS = 12
CLOSED_FORM_TOLERANCE = 5e-4
DEFAULT_OUT = "fuzzyheat-out"


@dataclass
class RunManifest:
    """
    Record of one command run

    Attributes
    ----------
    command : str
    source : str
        Problem file path or ``registry:<id>``
    overrides : dict
        Command line values that replaced problem-file settings
    version : str
    timestamp : str
        UTC, ISO 8601
    outputs : list of dict
        ``{"path", "sha256"}`` for every artifact written before the manifest
    """

    command: str
    source: str
    overrides: dict
    version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))
    outputs: list = field(default_factory=list)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _grid_counts(text):
    try:
        counts = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected nt,nx[,ny], got {text!r}") from None
    if len(counts) not in (2, 3):
        raise argparse.ArgumentTypeError(f"expected nt,nx[,ny], got {text!r}")
    return counts


def _points(text):
    points = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            points.append(tuple(float(part) for part in chunk.split(",")))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected t,x[,y] in {chunk!r}") from None
    if not points:
        raise argparse.ArgumentTypeError("no points given")
    return points


def build_parser():
    parser = _Parser(prog="fuzzyheat", description="Fuzzy heat-like equations: VIM, BFS and Seikkala solutions")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logging")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = _Parser(add_help=False)
    common.add_argument("--grid", type=_grid_counts, help="node counts nt,nx[,ny]")
    common.add_argument("--alpha-levels", type=int, dest="alpha_levels", help="number of alpha levels")
    common.add_argument("--tol", type=float, help="VIM convergence tolerance")
    common.add_argument("--out", default=DEFAULT_OUT, help=f"output directory (default: {DEFAULT_OUT})")

    source = _Parser(add_help=False)
    source.add_argument("problem", nargs="?", help="problem file (TOML)")
    source.add_argument("--registry", type=int, help="registered example id instead of a file")

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    solve = sub.add_parser("solve", parents=[source, common], help="crisp VIM solve at the parameter peaks")
    solve.set_defaults(handler=cmd_solve)

    cls = sub.add_parser("classify", parents=[source, common], help="BFS / Seikkala classification")
    cls.add_argument("--oracle", help="closed-form crisp solution G; defaults to the problem's oracle")
    cls.set_defaults(handler=cmd_classify)

    env = sub.add_parser("envelope", parents=[source, common], help="alpha-cut envelopes")
    env.add_argument("--oracle", help="closed-form crisp solution G; defaults to the problem's oracle")
    env.add_argument("--points", type=_points, help='"t,x[,y];..." (default: every grid node)')
    env.set_defaults(handler=cmd_envelope)

    rep = sub.add_parser("reproduce", parents=[common], help="check a registered example against its oracle")
    rep.add_argument("example", type=int, help=f"example id, one of {example_ids()}")
    rep.set_defaults(handler=cmd_reproduce)
    return parser


# ---------------------------------------------------------------------------
# problem loading and configuration
# ---------------------------------------------------------------------------


def _overrides(args):
    out = {}
    for key in ("grid", "alpha_levels", "tol"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = list(value) if isinstance(value, tuple) else value
    return out


def _apply_overrides(problem, args):
    if args.grid is not None:
        if len(args.grid) - 1 != problem.dimension:
            raise UsageError(f"--grid needs {problem.dimension + 1} counts for a {problem.dimension}D problem")
        problem = problem.with_grid(problem.grid.with_counts(*args.grid))
    if args.alpha_levels is not None:
        if args.alpha_levels < 2:
            raise UsageError("--alpha-levels must be at least 2")
        problem = problem.with_level_count(args.alpha_levels)
    return problem


def _load(args):
    if getattr(args, "registry", None) is not None:
        if args.problem is not None:
            raise UsageError("give either a problem file or --registry, not both")
        problem, source = load_example(args.registry), f"registry:{args.registry}"
    elif getattr(args, "problem", None) is not None:
        problem, source = read_problem(args.problem), str(args.problem)
    else:
        raise UsageError("a problem file or --registry is required")
    return _apply_overrides(problem, args), source


def _vim_config(args):
    return VimConfig() if args.tol is None else VimConfig(tolerance=args.tol)


def _ss_config(args):
    return SsConfig(vim=_vim_config(args))


def _solution_expression(args, problem):
    if getattr(args, "oracle", None):
        return expr.parse(args.oracle)
    if problem.oracle.solution is not None:
        return problem.oracle.solution
    return None


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------


def _number(value):
    return format(float(value), f".{DIGITS}g")


class _Artifacts(object):
    """ writes into the output directory and keeps the manifest entries """

    def __init__(self, directory, manifest):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.manifest = manifest

    def _record(self, path):
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.manifest.outputs.append({"path": path.name, "sha256": digest})
        logger.info("wrote %s", path)

    def csv(self, name, header, rows):
        path = self.directory / name
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([value if isinstance(value, str) else _number(value) for value in row])
        self._record(path)
        return path

    def json(self, name, payload):
        path = self.directory / name
        path.write_text(json.dumps(payload, sort_keys=True, indent=2, default=_jsonable) + "\n", encoding="utf-8")
        self._record(path)
        return path

    def close(self):
        path = self.directory / "manifest.json"
        path.write_text(json.dumps(asdict(self.manifest), sort_keys=True, indent=2) + "\n", encoding="utf-8")
        logger.info("wrote %s", path)
        return path


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _node_rows(f):
    spec = f.spec
    axes = [a.nodes() for a in spec.axes()]
    for index in np.ndindex(*spec.shape):
        yield [axes[k][i] for k, i in enumerate(index)] + [f.values[index]]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_solve(args):
    problem, source = _load(args)
    manifest = RunManifest("solve", source, _overrides(args))
    out = _Artifacts(args.out, manifest)
    inst = crisp_core(problem)
    result = solve_crisp(inst, _vim_config(args))
    report = {
        "command": "solve",
        "problem": problem.name,
        "bindings": inst.bindings,
        "converged": result.converged,
        "diverged": result.diverged,
        "iterations": result.iterations_used,
        "final_delta": result.final_delta,
        "residual_sup": result.residual_sup,
        "deltas": list(result.deltas),
    }
    if problem.oracle.solution is not None and not result.diverged:
        exact = GridFunction.from_callable(problem.grid, lambda **c: expr.evaluate(inst.bind(problem.oracle.solution), c))
        report["oracle_error"] = sup_norm_diff(result.solution, exact)
    out.csv("solution.csv", list(problem.grid.axis_names()) + ["U"], _node_rows(result.solution))
    out.json("report.json", report)
    out.close()
    print(f"converged: {str(result.converged).lower()}, iterations: {result.iterations_used}")
    if "oracle_error" in report:
        print(f"oracle error: {report['oracle_error']:.3e}")
    if result.diverged:
        raise NumericalError(
            f"VIM diverged after {result.iterations_used} iterations",
            diagnostics={"deltas": list(result.deltas)},
        )
    return 0


def _print_classification(report):
    print(f"verdict: {report.verdict}")
    for label, entry in sorted(report.sign_profile.entries.items()):
        print(f"  {label:<24} {entry.sign:<6} [{entry.minimum:.4g}, {entry.maximum:.4g}]")
    if report.differentiability is not None:
        for c in report.differentiability.conditions:
            print(f"  {c.name:<24} {'pass' if c.passed else 'FAIL'}")
    if report.ss is not None:
        region = report.ss.region
        if region.nonempty:
            print(f"  validity region: t <= {region.t_max:.6g}, {region.spatial_box}")
        else:
            print("  validity region: empty")
    for note in report.notes:
        print(f"  note: {note}")


def cmd_classify(args):
    problem, source = _load(args)
    G = _solution_expression(args, problem)
    if G is None:
        raise UsageError("classification needs G: pass --oracle or use a problem with an oracle solution")
    manifest = RunManifest("classify", source, _overrides(args))
    out = _Artifacts(args.out, manifest)
    report = classify(problem, G, SamplingConfig(), _ss_config(args))
    payload = report.to_dict()
    payload.update({"command": "classify", "problem": problem.name, "G": expr.to_string(G)})
    out.json("report.json", payload)
    out.close()
    _print_classification(report)
    return 0


def _grid_points(spec):
    axes = [a.nodes() for a in spec.axes()]
    return [tuple(float(axes[k][i]) for k, i in enumerate(index)) for index in np.ndindex(*spec.shape)]


def envelope_rows(problem, points, report=None, solution=None):
    """
    Rows ``(t, x[, y], alpha, lower, upper, valid)`` of the alpha-cut bands.

    Buckley-Feuring endpoints are evaluated at the requested coordinates;
    Seikkala endpoints are read at the nearest grid node, whose coordinates
    the row reports.  Points off the domain produce rows with NaN bounds and
    ``valid = 0``.
    """
    spec = problem.grid
    names = spec.axis_names()
    alphas = problem.alphas()
    bfs = report is not None and report.verdict == "BFS"
    rows = []
    for point in points:
        if len(point) != len(names):
            raise UsageError(f"point {point} needs coordinates {names}")
        coords = dict(zip(names, point))
        if not spec.contains(tol=1e-9, **coords):
            rows.extend(list(point) + [alpha, np.nan, np.nan, 0] for alpha in alphas)
            continue
        if bfs:
            for alpha in alphas:
                lo, hi = report.endpoints.z.evaluate(problem, alpha, coords)
                rows.append(list(point) + [alpha, float(lo), float(hi), 1])
            continue
        node = spec.node(**coords)
        at = [float(a.nodes()[i]) for a, i in zip(spec.axes(), node)]
        valid = int(bool(solution.mask[node]))
        for index, alpha in enumerate(solution.alphas):
            rows.append(at + [alpha, solution.lower[(index,) + node], solution.upper[(index,) + node], valid])
    return rows


def cmd_envelope(args):
    problem, source = _load(args)
    G = _solution_expression(args, problem)
    manifest = RunManifest("envelope", source, _overrides(args))
    out = _Artifacts(args.out, manifest)
    report = solution = None
    if G is not None:
        report = classify(problem, G, SamplingConfig(), _ss_config(args), check_consistency=False)
        solution = report.ss
    if report is None or (report.verdict != "BFS" and solution is None):
        solution = solve_levels(problem, cfg=_ss_config(args))
    points = args.points or _grid_points(problem.grid)
    rows = envelope_rows(problem, points, report, solution)
    header = list(problem.grid.axis_names()) + ["alpha", "lower", "upper", "valid"]
    out.csv("envelope.csv", header, [r[:-1] + [str(r[-1])] for r in rows])
    summary = {
        "command": "envelope",
        "problem": problem.name,
        "source": "BFS" if report is not None and report.verdict == "BFS" else "SS",
        "rows": len(rows),
        "invalid_rows": sum(1 for r in rows if r[-1] == 0),
    }
    if solution is not None:
        summary["region"] = solution.region.to_dict()
    out.json("report.json", summary)
    out.close()
    print(f"envelope: {summary['rows']} rows from the {summary['source']} endpoints, {summary['invalid_rows']} flagged invalid")
    return 0


# ---------------------------------------------------------------------------
# reproduce
# ---------------------------------------------------------------------------


@dataclass
class Check:
    """ one line of the reproduce table; ``passed`` is None for informational rows """

    name: str
    passed: object
    value: float
    bound: float = None
    detail: str = ""

    @property
    def status(self):
        if self.passed is None:
            return "info"
        return "PASS" if self.passed else "FAIL"


def _oracle_field(problem, e, alpha, coords):
    env = dict(coords)
    env.update(endpoint_environment(problem, alpha))
    return np.broadcast_to(expr.evaluate(e, env), problem.grid.shape)


def _ss_checks(problem, solution):
    oracle = problem.oracle
    coords = problem.grid.coordinates()
    region = solution.region
    where = region.box_mask() if region.nonempty else np.ones(problem.grid.shape, dtype=bool)
    checks = []
    for name, e, fields in (("ss_lower", oracle.ss_lower, solution.lower), ("ss_upper", oracle.ss_upper, solution.upper)):
        if e is None:
            continue
        worst = 0.0
        for index, alpha in enumerate(solution.alphas):
            exact = _oracle_field(problem, e, alpha, coords)
            worst = max(worst, float(np.max(np.abs(fields[index] - exact)[where])))
        checks.append(Check(name, worst <= CLOSED_FORM_TOLERANCE, worst, CLOSED_FORM_TOLERANCE, "on the validity box"))
    if oracle.region_t_max is not None:
        bound = problem.grid.t.spacing + 1e-12
        t_max = region.t_max if region.nonempty else 0.0
        error = abs(t_max - oracle.region_t_max)
        checks.append(Check("region_t_max", error <= bound, error, bound, f"computed {t_max:.6g}, expected {oracle.region_t_max:.6g}"))
    return checks


def _boundary_checks(problem, solution):
    checks = []
    t = problem.grid.t.upper
    g, k, c = (problem.parameter(name) for name in ("g", "k", "c"))
    for alpha in (0.0, 1.0):
        R = g.cut(alpha) - k.cut(alpha)
        S = c.cut(alpha) + g.cut(alpha)
        x = example4_boundary(t, R, S)
        checks.append(Check(f"boundary(alpha={alpha:g}, t={t:g})", None, float(x.lo), None, f"[{x.lo:.4g}, {x.hi:.4g}]"))
    if solution is not None and solution.region.nonempty:
        lo, hi = solution.region.spatial_box["x"]
        checks.append(Check("region x extent", None, hi - lo, None, f"[{lo:.4g}, {hi:.4g}]"))
    return checks


def reproduce(example_id, args=None):
    """
    Run the full pipeline on a registered example and compare it with the
    oracle.

    Returns
    -------
    (HeatLikeProblem, ClassificationReport, list of Check)
    """
    problem = load_example(example_id)
    vim_cfg = VimConfig()
    if args is not None:
        problem = _apply_overrides(problem, args)
        vim_cfg = _vim_config(args)
    oracle = problem.oracle
    checks = []
    inst = crisp_core(problem)
    if oracle.solution is not None:
        result = solve_crisp(inst, vim_cfg)
        exact = GridFunction.from_callable(problem.grid, lambda **c: expr.evaluate(inst.bind(oracle.solution), c))
        error = np.inf if result.diverged else sup_norm_diff(result.solution, exact)
        checks.append(Check("crisp VIM error", error <= CLOSED_FORM_TOLERANCE, error, CLOSED_FORM_TOLERANCE))

    report = classify(problem, oracle.solution, SamplingConfig(), SsConfig(vim=vim_cfg))
    if oracle.verdict is not None:
        checks.append(Check("verdict", report.verdict == oracle.verdict, np.nan, None, f"{report.verdict} (expected {oracle.verdict})"))
    if report.consistency is not None:
        ok = report.consistency <= CLOSED_FORM_TOLERANCE
        checks.append(Check("BFS = SS endpoints", ok, report.consistency, CLOSED_FORM_TOLERANCE))
    if report.ss is not None:
        checks.extend(_ss_checks(problem, report.ss))
    elif oracle.ss_lower is not None or oracle.region_t_max is not None:
        checks.append(Check("seikkala solve", False, np.nan, None, "no Seikkala solution"))
    if int(example_id) == 4:
        checks.extend(_boundary_checks(problem, report.ss))
    return problem, report, checks


def _check_record(c):
    record = asdict(c)
    record["status"] = c.status
    if not np.isfinite(c.value):
        record["value"] = None
    return record


def cmd_reproduce(args):
    manifest = RunManifest("reproduce", f"registry:{args.example}", _overrides(args))
    problem, report, checks = reproduce(args.example, args)
    out = _Artifacts(args.out, manifest)
    payload = {
        "command": "reproduce",
        "example": args.example,
        "problem": problem.name,
        "checks": [_check_record(c) for c in checks],
        "classification": report.to_dict(),
    }
    out.json("report.json", payload)
    out.close()
    print(f"example {args.example}: {problem.name}")
    for c in checks:
        bound = "" if c.bound is None else f"{c.bound:.3g}"
        print(f"  {c.name:<28} {c.status:<5} {c.value:>12.4g} {bound:>10}  {c.detail}")
    failed = [c.name for c in checks if c.passed is False]
    if failed:
        raise AcceptanceError(f"example {args.example} failed: {', '.join(failed)}")
    print("PASS")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _error_context(exc):
    context = {"error": type(exc).__name__, "message": str(exc)}
    for key in ("location", "offset", "symbol", "subexpression", "node", "offending", "diagnostics"):
        value = getattr(exc, key, None)
        if value:
            context[key] = value
    if getattr(exc, "expected", None):
        context["expected"] = sorted(exc.expected)
    return context


def main(argv=None):
    """ run the command line; returns the process exit code """
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            logging.getLogger("fuzzyheat").setLevel(logging.DEBUG if args.verbose > 1 else logging.INFO)
        return args.handler(args)
    except FuzzyHeatError as exc:
        print(json.dumps(_error_context(exc), sort_keys=True, default=str), file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(json.dumps({"error": "FileNotFoundError", "message": f"not found: {exc.filename}"}), file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
