"""``stpod`` experiment driver: FOM solve, reduction sweeps, bound checks, CSV output.

Exit codes: 0 success, 1 hard bound failure, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as la

from .error_analysis import (
    CSV_COLUMNS, ErrorReport, build_report, c_rho_t, effective_constant_stability,
    verify_bounds,
)
from .field import (
    CoefficientField, field_from_csv, field_to_csv, sample_grid, weighted_matrix,
    zero_first_column,
)
from .galerkin import assemble_rhs, assemble_rom, project_initial, solve_fom, solve_rom
from .grid_fem import BoundaryMode, GramianSet, assemble_gramians, build_uniform_grid
from .pod import ProjectionOrder, project_composite, space_basis_to_csv, time_basis_to_csv
from .problems import PROBLEMS

log = logging.getLogger("stpod")

EXIT_OK, EXIT_BOUND, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

EXAMPLE_DEFAULTS = {
    1: {"mu": 0.4, "n_time": 101, "n_space": 101, "q_hat": 20, "s_hat": 20,
        "quad_order": 3, "subdivide": 1, "sweep_diagonal": None},
    2: {"mu": 1.0, "n_time": 101, "n_space": 101, "q_hat": 20, "s_hat": 20,
        "quad_order": 3, "subdivide": 4, "sweep_diagonal": (2, 60, 2)},
}
COMMON_DEFAULTS = {"order": ProjectionOrder.SPACE_FIRST, "full_sweep": False,
                   "out": Path("stpod_out"), "cache": True, "workers": 1,
                   "c_ratio_limit": 100.0}
FULL_SWEEP_VALUES = tuple(range(5, 61, 5))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    example: int
    n_time: int
    n_space: int
    mu: float
    order: ProjectionOrder
    q_hat: int
    s_hat: int
    sweep: tuple = ()  # (q_hat, s_hat) pairs; empty means the single configured point
    quad_order: int = 3
    subdivide: int = 1
    output_dir: Path = Path("stpod_out")
    cache: bool = True
    workers: int = 1
    c_ratio_limit: float = 100.0

    def sweep_points(self) -> tuple:
        return self.sweep if self.sweep else ((self.q_hat, self.s_hat),)


# ---------------------------------------------------------------------------
# parsing

def _positive_int(text) -> int:
    try:
        v = int(text)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _positive_float(text) -> float:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (np.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _grid_nodes(text) -> int:
    v = _positive_int(text)
    if v < 3:
        raise argparse.ArgumentTypeError(f"grids need at least 3 nodes, got {v}")
    return v


def _diagonal(text) -> tuple:
    parts = str(text).split(":")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError(f"expected A:B or A:B:STEP, got {text!r}")
    a, b = _positive_int(parts[0]), _positive_int(parts[1])
    step = _positive_int(parts[2]) if len(parts) == 3 else 2
    if b < a:
        raise argparse.ArgumentTypeError(f"empty diagonal range {text!r}")
    return (a, b, step)


def _order(text) -> ProjectionOrder:
    try:
        return ProjectionOrder(str(text))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"order must be space-first or time-first, got {text!r}") from None


def _bool(text) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


# key -> converter, shared by flags and config-file entries
CONVERTERS = {
    "example": lambda t: int(_choice(t, ("1", "2"))),
    "n_time": _grid_nodes,
    "n_space": _grid_nodes,
    "mu": _positive_float,
    "order": _order,
    "q_hat": _positive_int,
    "s_hat": _positive_int,
    "sweep_diagonal": _diagonal,
    "full_sweep": _bool,
    "quad_order": _positive_int,
    "subdivide": _positive_int,
    "out": Path,
    "cache": _bool,
    "workers": _positive_int,
    "c_ratio_limit": _positive_float,
}


def _choice(text, allowed):
    t = str(text).strip()
    if t not in allowed:
        raise argparse.ArgumentTypeError(f"expected one of {', '.join(allowed)}, got {text!r}")
    return t


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stpod", description="Space-time POD experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="solve, reduce, check bounds and write CSV outputs",
                         argument_default=argparse.SUPPRESS)
    run.add_argument("--example", type=CONVERTERS["example"], help="1 or 2 (default 1)")
    run.add_argument("--config", type=Path, help="flat key = value file mirroring flag names")
    run.add_argument("--n-time", dest="n_time", type=_grid_nodes)
    run.add_argument("--n-space", dest="n_space", type=_grid_nodes)
    run.add_argument("--mu", type=_positive_float)
    run.add_argument("--order", type=_order, help="space-first or time-first")
    run.add_argument("--q-hat", dest="q_hat", type=_positive_int)
    run.add_argument("--s-hat", dest="s_hat", type=_positive_int)
    run.add_argument("--sweep-diagonal", dest="sweep_diagonal", type=_diagonal,
                     metavar="A:B[:STEP]", help="q_hat = s_hat over a range (step defaults to 2)")
    run.add_argument("--full-sweep", dest="full_sweep", action="store_true",
                     help="rectangle {5, 10, ..., 60}^2")
    run.add_argument("--quad-order", dest="quad_order", type=_positive_int)
    run.add_argument("--subdivide", type=_positive_int)
    run.add_argument("--out", type=Path)
    run.add_argument("--no-cache", dest="cache", action="store_false")
    run.add_argument("--workers", type=_positive_int)
    run.add_argument("--c-ratio-limit", dest="c_ratio_limit", type=_positive_float,
                     help="allowed max/min spread of the observed constant over a sweep")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def read_config_file(path: Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment; keys may use ``-`` or ``_``."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "no_cache":
            key, value = "cache", str(not _bool(value))
        if key not in CONVERTERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}; valid keys: "
                              + ", ".join(sorted(CONVERTERS)))
        try:
            values[key] = CONVERTERS[key](value)
        except argparse.ArgumentTypeError as exc:
            raise ConfigError(f"{path}:{lineno}: {key}: {exc}") from None
    return values


def resolve_config(flags: dict, file_values: Optional[dict] = None) -> ExperimentConfig:
    """Merge flags over file values over example defaults and validate against the grid."""
    file_values = file_values or {}
    example = flags.get("example", file_values.get("example", 1))
    merged = {**COMMON_DEFAULTS, **EXAMPLE_DEFAULTS[example], **file_values, **flags}
    q, s = merged["n_space"] - 2, merged["n_time"]
    explicit = set(file_values) | set(flags)
    for key, dim in (("q_hat", q), ("s_hat", s)):
        if merged[key] > dim:
            if key in explicit:
                raise ConfigError(f"{key}={merged[key]} exceeds the available dimension {dim}")
            merged[key] = dim

    if merged["full_sweep"]:
        sweep = tuple((a, b) for a in FULL_SWEEP_VALUES for b in FULL_SWEEP_VALUES)
    elif merged["sweep_diagonal"] is not None:
        a, b, step = merged["sweep_diagonal"]
        sweep = tuple((k, k) for k in range(a, b + 1, step))
    else:
        sweep = ()
    if merged["sweep_diagonal"] is not None and "sweep_diagonal" not in explicit:
        # default sweeps shrink to the grid instead of failing
        sweep = tuple((a, b) for a, b in sweep if a <= q and b <= s)
    bad = [(a, b) for a, b in sweep if a > q or b > s]
    if bad:
        raise ConfigError(f"sweep point {bad[0]} exceeds the available dimensions ({q}, {s})")
    if merged["quad_order"] < 2:
        raise ConfigError("quad_order must be at least 2")
    return ExperimentConfig(
        example=example, n_time=merged["n_time"], n_space=merged["n_space"], mu=merged["mu"],
        order=merged["order"], q_hat=merged["q_hat"], s_hat=merged["s_hat"], sweep=sweep,
        quad_order=merged["quad_order"], subdivide=merged["subdivide"],
        output_dir=Path(merged["out"]), cache=merged["cache"], workers=merged["workers"],
        c_ratio_limit=merged["c_ratio_limit"],
    )


def parse_config(argv: Sequence[str]) -> tuple[ExperimentConfig, bool]:
    """Parse ``stpod`` arguments; returns the config and the verbosity switch.

    argparse usage errors exit with status 2; file and consistency problems
    raise :class:`ConfigError` (also status 2 in :func:`main`).
    """
    ns = vars(build_parser().parse_args(list(argv)))
    ns.pop("command")
    verbose = ns.pop("verbose", False)
    config_path = ns.pop("config", None)
    file_values = read_config_file(config_path) if config_path is not None else {}
    return resolve_config(ns, file_values), verbose


# ---------------------------------------------------------------------------
# pipeline

def _fmt(v) -> str:
    return format(float(v), ".17g")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _cache_path(config: ExperimentConfig, problem) -> Path:
    key = {"problem": problem.cache_key(), "n_time": config.n_time, "n_space": config.n_space,
           "quad_order": config.quad_order, "subdivide": config.subdivide, "solver": "kron"}
    digest = hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()
    return config.output_dir / ".fom_cache" / f"{digest}.csv"


def setup(config: ExperimentConfig):
    problem = PROBLEMS[config.example](config.mu)
    tg = build_uniform_grid(0.0, problem.T, config.n_time, BoundaryMode.ALL_NODES)
    sg = build_uniform_grid(*problem.space_interval, config.n_space, BoundaryMode.ZERO_DIRICHLET)
    g = assemble_gramians(tg, sg, problem.mu)
    return problem, g


def full_order(config: ExperimentConfig, problem, g: GramianSet) -> CoefficientField:
    path = _cache_path(config, problem)
    if config.cache and path.exists():
        log.info("fom_cache hit path=%s", path)
        fom = field_from_csv(path.read_text())
        if fom.X.shape == (g.q, g.s):
            return fom
        log.warning("fom_cache shape mismatch path=%s", path)
    fom = solve_fom(problem, g, config.quad_order, config.subdivide)
    if config.cache:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(field_to_csv(fom))
        tmp.replace(path)
    # round-trip so cold and cached runs see the same bits
    return field_from_csv(field_to_csv(fom))


def singular_value_rows(fom: CoefficientField, g: GramianSet, q_hat: int, s_hat: int):
    """Decays of ``X``, ``X0`` after the space stage, ``X0``, and ``X`` after the time stage."""
    sf = project_composite(fom, ProjectionOrder.SPACE_FIRST, q_hat, s_hat, g)
    tf = project_composite(fom, ProjectionOrder.TIME_FIRST, q_hat, s_hat, g)
    decays = [
        la.svdvals(weighted_matrix(fom, g)),
        la.svdvals(weighted_matrix(zero_first_column(sf.intermediate), g)),
        la.svdvals(weighted_matrix(zero_first_column(fom), g)),
        la.svdvals(weighted_matrix(tf.intermediate, g)),
    ]
    n = max(d.size for d in decays)
    for k in range(n):
        yield [str(k + 1)] + [_fmt(d[k]) if k < d.size else "" for d in decays]


SINGULAR_VALUE_COLUMNS = ["index", "sigma_full", "sigma_ic_after_space",
                          "sigma_ic", "sigma_after_time"]


def field_rows(g: GramianSet, fom, projected, rom_lifted):
    xi = g.space_grid.nodes
    tau = g.time_grid.nodes
    samples = [sample_grid(f, xi, tau) for f in (fom, fom - projected, fom - rom_lifted)]
    for r, t in enumerate(tau):
        for p, x in enumerate(xi):
            yield [_fmt(t), _fmt(x)] + [_fmt(v[p, r]) for v in samples]


def run_example(config: ExperimentConfig, stream=None) -> int:
    stream = stream or sys.stdout
    try:
        config.output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create {config.output_dir}: {exc}", file=sys.stderr)
        return EXIT_IO
    problem, g = setup(config)
    try:
        fom = full_order(config, problem, g)
    except OSError as exc:
        print(f"error: FOM cache I/O failed: {exc}", file=sys.stderr)
        return EXIT_IO
    F = assemble_rhs(problem, g.time_grid, g.space_grid, config.quad_order, config.subdivide)
    c0 = project_initial(problem.initial, g.space_grid, g, config.quad_order, config.subdivide)
    constant = c_rho_t(g)

    def point(qs):
        return build_report(fom, config.order, qs[0], qs[1], g, F=F, ic_coeffs=c0,
                            constant=constant)

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        reports: list[ErrorReport] = list(pool.map(point, config.sweep_points()))

    comp = project_composite(fom, config.order, config.q_hat, config.s_hat, g)
    rom = solve_rom(assemble_rom(g, comp.space_basis, comp.time_basis, F, c0), g)

    out = config.output_dir
    try:
        _write_csv(out / "errors.csv", CSV_COLUMNS, (r.csv_row() for r in reports))
        _write_csv(out / "singular_values.csv", SINGULAR_VALUE_COLUMNS,
                   singular_value_rows(fom, g, config.q_hat, config.s_hat))
        (out / "bases_space.csv").write_text(space_basis_to_csv(comp.space_basis, g))
        (out / "bases_time.csv").write_text(time_basis_to_csv(comp.time_basis, g))
        _write_csv(out / "fields.csv", ["tau", "xi", "fom", "projection_error", "rom_error"],
                   field_rows(g, fom, comp.projected, rom.lifted))
    except OSError as exc:
        print(f"error: writing outputs failed: {exc}", file=sys.stderr)
        return EXIT_IO

    failures = []
    for r in reports:
        for check in verify_bounds(r):
            if check.failed:
                failures.append((r, check))
    stability = effective_constant_stability(reports, config.c_ratio_limit)
    print(f"example={config.example} order={config.order.value} q={g.q} s={g.s} "
          f"points={len(reports)} c_rho_t={constant:.6f}", file=stream)
    for r, check in failures:
        print(f"FAIL {check.name} q_hat={r.q_hat} s_hat={r.s_hat} "
              f"value={check.value:.6e} bound={check.bound:.6e}", file=stream)
    detail = f" ({stability.detail})" if stability.detail else ""
    status = {True: "ok", False: "WARN", None: "skipped"}[stability.passed]
    print(f"effective_C spread {status}: ratio={stability.value:.3e} "
          f"limit={stability.bound:.3e}{detail}", file=stream)
    print(f"hard checks: {'all passed' if not failures else f'{len(failures)} failed'}; "
          f"outputs in {out}", file=stream)
    return EXIT_BOUND if failures else EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config, verbose = parse_config(argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG
    except ConfigError as exc:
        print(f"stpod: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"stpod: cannot read config file: {exc}", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s %(message)s")
    return run_example(config)


if __name__ == "__main__":
    sys.exit(main())
