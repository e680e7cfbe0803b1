"""Exhaustive grid solvers for equilibrium-type problems.

The solvers are oracles, not iterative methods: they scan the full grid and
test the defining inequalities directly, so their output doubles as ground
truth.  The inner minimization over K(x) always uses the restriction of the
single global grid, which makes solution-set comparisons across problem
reformulations literal sequence equalities.

Reports are deterministic for a given instance and config, and byte-identical
regardless of worker count (the outer scan is chunked by index; chunk results
are concatenated in index order).
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bifunction import Bifunction, ObjectiveFunction, make_opt_bifunction
from .errors import DegenerateImageError
from .geometry import Grid, Point, grid_points
from .setmap import (
    FAIL,
    NO_VIOLATION_FOUND,
    SetValuedMap,
    TopologyProbeReport,
    check_closed_graph,
    check_convex_values,
    check_lsc,
    default_margin,
    default_probe_radii,
    image_grid,
    image_index_ranges,
    membership_residuals,
)

QEP = "QEP"
EP = "EP"
QOPT = "QOPT"
QVI = "QVI"


@dataclass(frozen=True)
class SolverConfig:
    grid: Grid
    eps_value: float = 1e-6
    delta_membership: float = 0.0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.eps_value < 0 or self.delta_membership < 0:
            raise ValueError("tolerances must be nonnegative")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def echo(self) -> dict:
        # worker count deliberately omitted: reports must be byte-identical
        # regardless of how the scan was parallelized
        return {
            "grid": list(self.grid.points_per_axis),
            "eps": self.eps_value,
            "delta": self.delta_membership,
        }


@dataclass(frozen=True)
class SolutionRecord:
    point: Point
    membership_residual: float
    min_f: float
    gap: Optional[float] = None


@dataclass(frozen=True)
class SolveReport:
    problem_kind: str
    solutions: tuple
    config: dict
    min_gap_over_fixed_points: Optional[float] = None
    degenerate_points: int = 0
    wall_time: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class SMapResult:
    base_point: Point
    members: tuple


@dataclass(frozen=True)
class TheoremReport:
    checks: dict
    solve_report: SolveReport
    anomaly: bool

    def verdicts(self) -> dict:
        return {name: rep.verdict for name, rep in self.checks.items()}


# -- internal helpers -------------------------------------------------------


def _coords_matrix(grid: Grid) -> Optional[np.ndarray]:
    if grid.box.is_exact:
        return None
    mesh = np.meshgrid(*[np.asarray(ax) for ax in grid.axes], indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _flat_indices(grid: Grid, ranges: Sequence[tuple[int, int]]) -> np.ndarray:
    """Flat lexicographic indices of the sub-rectangle given by per-axis ranges."""
    sizes = grid.points_per_axis
    idx = np.arange(ranges[0][0], ranges[0][1])
    for k in range(1, len(sizes)):
        nxt = np.arange(ranges[k][0], ranges[k][1])
        idx = (idx[:, None] * sizes[k] + nxt[None, :]).ravel()
    return idx


def _chunks(n: int, workers: int) -> list[tuple[int, int]]:
    pieces = max(1, workers * 4) if workers > 1 else 1
    size = max(1, -(-n // pieces))
    return [(i, min(i + size, n)) for i in range(0, n, size)]


def _run_chunked(n: int, workers: int, work) -> list:
    spans = _chunks(n, workers)
    if workers == 1 or len(spans) == 1:
        out: list = []
        for span in spans:
            out.extend(work(span))
        return out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(work, spans))
    out = []
    for part in parts:
        out.extend(part)
    return out


# -- the selection map ------------------------------------------------------


def smap(f: Bifunction, K: SetValuedMap, x: Point, cfg: SolverConfig) -> SMapResult:
    """Members x0 of the image grid with f(x0, y) >= -eps for all image y."""
    grid = cfg.grid
    eps = cfg.eps_value
    pts = image_grid(K, x, grid)
    if not pts:
        raise DegenerateImageError(f"image grid of {x} is empty")
    if f.scalar_kind == "exact" or grid.box.is_exact:
        members = []
        for x0 in pts:
            vals = [f.fn(x0, y) for y in pts]
            if all(v >= -eps for v in vals):
                members.append(x0)
        return SMapResult(x, tuple(members))
    Y = np.asarray(pts, dtype=float)
    pre = f.row_pre(Y)
    members = []
    for x0 in pts:
        row = f.row(x0, Y, pre)
        if row.min() >= -eps:
            members.append(x0)
    return SMapResult(x, tuple(members))


# -- QEP / EP ---------------------------------------------------------------


def _range_tables(K: SetValuedMap, grid: Grid) -> Optional[list[np.ndarray]]:
    """Per-axis (start, stop) image index ranges for every grid point at once.

    Matches image_index_ranges exactly (same searchsorted semantics and
    membership snap); None when the map has no batch bound path.
    """
    from .setmap import _grid_env

    env = _grid_env(grid)
    if env is None:
        return None
    batch = K.bounds_batch(env)
    if batch is None:
        return None
    lo, hi = batch
    snap = K.domain.snap()
    tables = []
    for k in range(grid.dim):
        ax = np.asarray(grid.axes[k])
        start = np.searchsorted(ax, lo[:, k] - snap, side="left")
        stop = np.searchsorted(ax, hi[:, k] + snap, side="right")
        tables.append(np.column_stack([start, stop]))
    return tables


def solve_qep(f: Bifunction, K: SetValuedMap, cfg: SolverConfig, kind: str = QEP) -> SolveReport:
    start = time.perf_counter()
    grid = cfg.grid
    eps, delta = cfg.eps_value, cfg.delta_membership
    snap = grid.box.snap()
    residuals = membership_residuals(K, grid)
    pts = grid_points(grid)
    coords = _coords_matrix(grid)
    range_tables = _range_tables(K, grid)
    pre_full = None
    pre_shaped = None
    if coords is not None and f.row_pre_fn is not None:
        pre_full = f.row_pre(coords)
        pre_shaped = np.asarray(pre_full).reshape(grid.points_per_axis)
    use_row_min = pre_shaped is not None and f.row_min_fn is not None

    degenerate = [0]

    def scan(span: tuple[int, int]) -> list:
        lo_i, hi_i = span
        found = []
        ndeg = 0
        for i in range(lo_i, hi_i):
            r = residuals[i]
            if not (r <= delta + snap):
                continue
            x = pts[i]
            if range_tables is not None:
                ranges = tuple((int(t[i, 0]), int(t[i, 1])) for t in range_tables)
            else:
                ranges = image_index_ranges(K, x, grid)
            if any(s >= e for s, e in ranges):
                ndeg += 1
                continue
            if coords is None:
                image_pts = image_grid(K, x, grid)
                minf = min(f.fn(x, y) for y in image_pts)
                ok = minf >= -eps
                minf_out = float(minf)
            elif use_row_min:
                view = pre_shaped[tuple(slice(s, e) for s, e in ranges)]
                minf_out = f.row_min(x, view)
                ok = minf_out >= -eps
            else:
                sel = _flat_indices(grid, ranges)
                Y = coords[sel]
                pre = pre_full[sel] if pre_full is not None else None
                row = f.row(x, Y, pre)
                minf_out = float(row.min())
                ok = minf_out >= -eps
            if ok:
                found.append(SolutionRecord(x, float(r), minf_out))
        degenerate[0] += ndeg
        return found

    records = _run_chunked(len(pts), cfg.workers, scan)
    return SolveReport(
        problem_kind=kind,
        solutions=tuple(records),
        config=cfg.echo(),
        degenerate_points=degenerate[0],
        wall_time=time.perf_counter() - start,
    )


def solve_ep(f: Bifunction, C_box, cfg: SolverConfig) -> SolveReport:
    """The K == C special case; identical to solve_qep with a constant map."""
    K = SetValuedMap.constant(C_box)
    report = solve_qep(f, K, cfg, kind=EP)
    return report


# -- QOpt -------------------------------------------------------------------


def _objective_table(h: ObjectiveFunction, grid: Grid):
    """h at every grid point, lexicographic (numpy array on the float path)."""
    coords = _coords_matrix(grid)
    if coords is None:
        return [h.fn(p) for p in grid_points(grid)]
    return h.eval_batch(coords)


def qopt_gap(h: ObjectiveFunction, K: SetValuedMap, x: Point, cfg: SolverConfig) -> float:
    """h(x) minus the minimum of h over the image grid of x."""
    grid = cfg.grid
    pts = image_grid(K, x, grid)
    if not pts:
        raise DegenerateImageError(f"image grid of {x} is empty")
    if grid.box.is_exact:
        m = min(h.fn(p) for p in pts)
        return float(h.fn(x) - m)
    Y = np.asarray(pts, dtype=float)
    return float(h.fn(x) - h.eval_batch(Y).min())


def solve_qopt(h: ObjectiveFunction, K: SetValuedMap, cfg: SolverConfig) -> SolveReport:
    start = time.perf_counter()
    grid = cfg.grid
    eps, delta = cfg.eps_value, cfg.delta_membership
    snap = grid.box.snap()
    residuals = membership_residuals(K, grid)
    pts = grid_points(grid)
    table = _objective_table(h, grid)
    exact = grid.box.is_exact
    shaped = None if exact else np.asarray(table).reshape(grid.points_per_axis)
    range_tables = _range_tables(K, grid)

    degenerate = [0]
    gaps_min = [None]

    def scan(span: tuple[int, int]) -> list:
        lo_i, hi_i = span
        found = []
        ndeg = 0
        local_min = None
        for i in range(lo_i, hi_i):
            r = residuals[i]
            if not (r <= delta + snap):
                continue
            x = pts[i]
            if range_tables is not None:
                ranges = tuple((int(t[i, 0]), int(t[i, 1])) for t in range_tables)
            else:
                ranges = image_index_ranges(K, x, grid)
            if any(s >= e for s, e in ranges):
                ndeg += 1
                continue
            if exact:
                sub = min(
                    table[_flat_index(grid, idx)]
                    for idx in itertools.product(*(range(s, e) for s, e in ranges))
                )
                gap = float(table[i] - sub)
            else:
                view = shaped[tuple(slice(s, e) for s, e in ranges)]
                gap = float(table[i] - view.min())
            if local_min is None or gap < local_min:
                local_min = gap
            if gap <= eps:
                found.append(SolutionRecord(x, float(r), -gap, gap=gap))
        degenerate[0] += ndeg
        if local_min is not None and (gaps_min[0] is None or local_min < gaps_min[0]):
            gaps_min[0] = local_min
        return found

    records = _run_chunked(len(pts), cfg.workers, scan)
    return SolveReport(
        problem_kind=QOPT,
        solutions=tuple(records),
        config=cfg.echo(),
        min_gap_over_fixed_points=gaps_min[0],
        degenerate_points=degenerate[0],
        wall_time=time.perf_counter() - start,
    )


def _flat_index(grid: Grid, idx: tuple) -> int:
    flat = 0
    for k, i in enumerate(idx):
        flat = flat * grid.points_per_axis[k] + i
    return flat


# -- equivalence and theorem verification -----------------------------------


def check_lemma_equivalence(h: ObjectiveFunction, K: SetValuedMap, cfg: SolverConfig) -> bool:
    """Grid solution sets of the QEP reformulation and the direct QOpt scan agree."""
    f = make_opt_bifunction(h, K.domain, scalar_kind="exact" if cfg.grid.box.is_exact else "real")
    qep = solve_qep(f, K, cfg)
    qopt = solve_qopt(h, K, cfg)
    return [rec.point for rec in qep.solutions] == [rec.point for rec in qopt.solutions]


def verify_theorem_instance(
    instance, cfg: SolverConfig, trials: int = 400, seed: int = 1729
) -> TheoremReport:
    """Run the six hypothesis checkers, then solve, and flag anomalies.

    The verdicts are falsifier outputs, so an empty solution set with all
    checks clean is reported as an ANOMALY (grid artifact or counterexample
    candidate), never as a refutation.
    """
    from .bifunction import (
        check_condition_ii,
        check_condition_iii,
        check_condition_iv,
    )

    f = instance.bifunction()
    K = instance.K
    grid = cfg.grid
    checks = {
        "closed_graph": check_closed_graph(K, grid),
        "lsc": check_lsc(K, grid),
        "convex_values": check_convex_values(K, grid),
        "condition_ii": check_condition_ii(f, instance.C, seed=seed),
        "condition_iii": check_condition_iii(f, instance.C, trials=trials, seed=seed),
        "condition_iv": check_condition_iv(f, grid, seed=seed),
    }
    solve_report = solve_qep(f, K, cfg, kind=instance.problem_kind())
    all_clean = all(rep.verdict == NO_VIOLATION_FOUND for rep in checks.values())
    anomaly = all_clean and not solve_report.solutions
    return TheoremReport(checks=checks, solve_report=solve_report, anomaly=anomaly)


# -- sampled closedness of the selection map --------------------------------


def smap_closed_graph_probe(
    f: Bifunction,
    K: SetValuedMap,
    cfg: SolverConfig,
    radii: Optional[Sequence[float]] = None,
    margin: Optional[float] = None,
    probe_budget: int = 21,
) -> TopologyProbeReport:
    """The closed-graph falsifier applied to the sampled graph of the selection map.

    The graph is sampled at grid base points; member sets are computed lazily
    and cached.  Verdict semantics match check_closed_graph.
    """
    grid = cfg.grid
    radii = tuple(radii) if radii is not None else default_probe_radii(grid)
    margin = margin if margin is not None else default_margin(grid, radii)
    sizes = grid.points_per_axis

    cache: dict = {}

    def members_at(index: tuple) -> tuple:
        if index not in cache:
            x = grid.point_at(index)
            try:
                cache[index] = smap(f, K, x, cfg).members
            except DegenerateImageError:
                cache[index] = ()
        return cache[index]

    def dist_to_members(z: Point, members: tuple) -> float:
        if not members:
            return float("inf")
        return min(max(abs(float(a) - float(b)) for a, b in zip(z, m)) for m in members)

    def lattice_indices() -> list:
        per_axis = max(2, probe_budget if grid.dim == 1 else {2: 7, 3: 4}[grid.dim])
        axes = []
        for m in sizes:
            if m <= per_axis:
                axes.append(list(range(m)))
            else:
                axes.append(sorted({round(i * (m - 1) / (per_axis - 1)) for i in range(per_axis)}))
        return [idx for idx in itertools.product(*axes)]

    def near_indices(index: tuple, r: float) -> list:
        out = []
        for k in range(grid.dim):
            step = (float(grid.box.upper[k]) - float(grid.box.lower[k])) / (sizes[k] - 1)
            width = max(1, int(r / step))
            for off in {-width, -max(1, width // 2), 0, max(1, width // 2), width}:
                i = min(max(index[k] + off, 0), sizes[k] - 1)
                cand = list(index)
                cand[k] = i
                out.append(tuple(cand))
        return sorted(set(out))

    probe = lattice_indices()
    samples = 0
    for xi in probe:
        x = grid.point_at(xi)
        mem_x = members_at(xi)
        for zi in probe:
            z = grid.point_at(zi)
            samples += 1
            if dist_to_members(z, mem_x) < margin:
                continue
            trail = []
            for r in radii:
                hit = None
                for xpi in near_indices(xi, r):
                    xp = grid.point_at(xpi)
                    if max(abs(float(a) - float(b)) for a, b in zip(x, xp)) > r:
                        continue
                    mem = members_at(xpi)
                    for m in mem:
                        if max(abs(float(a) - float(b)) for a, b in zip(z, m)) <= r:
                            hit = {"radius": r, "x_prime": xp, "z_prime": m}
                            break
                    if hit:
                        break
                if hit is None:
                    break
                trail.append(hit)
            if len(trail) == len(radii):
                witness = {"x": x, "z": z, "approach": trail}
                return TopologyProbeReport(FAIL, witness, radii, samples)
    return TopologyProbeReport(NO_VIOLATION_FOUND, None, radii, samples)
