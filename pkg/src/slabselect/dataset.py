"""Benchmark every solver over a feature grid and label the winners."""
import csv
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

from slabselect import SOLVERS
from slabselect.quadrature import gauss_legendre
from slabselect.transport import SlabProblem, solve

log = logging.getLogger(__name__)

DEFAULT_TIE_BREAK = ("richardson", "dsa", "nda")
CRITERIA = ("sweeps", "runtime")

_PREFIX = {"richardson": "rich", "dsa": "dsa", "nda": "nda"}
COLUMNS = (
    ["sn_order", "num_cells", "scattering_ratio"]
    + [f"{_PREFIX[s]}_sweeps" for s in SOLVERS]
    + [f"{_PREFIX[s]}_runtime_s" for s in SOLVERS]
    + [f"{_PREFIX[s]}_converged" for s in SOLVERS]
    + ["best_sweeps", "best_runtime"]
)


class DatasetFormatError(ValueError):
    """A dataset CSV does not follow the column schema."""


class LabelingError(ValueError):
    """No solver converged for a case, so no winner exists."""


@dataclass(frozen=True)
class FeatureGrid:
    sn_orders: tuple = (2, 4, 8, 16, 32)
    cell_counts: tuple = tuple(2**i for i in range(2, 11))
    scattering_ratios: tuple = tuple(k / 100 for k in range(101))

    def __len__(self):
        return len(self.sn_orders) * len(self.cell_counts) * len(self.scattering_ratios)

    def points(self):
        return itertools.product(self.sn_orders, self.cell_counts, self.scattering_ratios)


@dataclass
class CaseRecord:
    sn_order: int
    num_cells: int
    scattering_ratio: float
    sweeps: dict = field(default_factory=dict)
    runtime_seconds: dict = field(default_factory=dict)
    converged: dict = field(default_factory=dict)
    best_sweeps: Optional[str] = None
    best_runtime: Optional[str] = None

    @property
    def features(self):
        return (self.sn_order, self.num_cells, self.scattering_ratio)

    def label(self, criterion: str) -> Optional[str]:
        if criterion == "sweeps":
            return self.best_sweeps
        if criterion == "runtime":
            return self.best_runtime
        raise ValueError(f"unknown criterion {criterion!r}; choose from {CRITERIA}")


def run_case(template: SlabProblem, sn_order: int, num_cells: int, scattering_ratio: float,
             on_case: Callable = None) -> CaseRecord:
    """Solve one grid point with all three solvers, one after another."""
    problem = replace(template, sn_order=sn_order, num_cells=num_cells,
                      scattering_ratio=scattering_ratio)
    quad = gauss_legendre(sn_order)
    rec = CaseRecord(sn_order, num_cells, scattering_ratio)
    outcomes = {}
    for name in SOLVERS:
        out = solve(problem, name, quad)
        outcomes[name] = out
        rec.sweeps[name] = out.sweeps
        rec.runtime_seconds[name] = out.runtime_seconds
        rec.converged[name] = out.converged
        if not out.converged:
            log.info("%s did not converge at N=%d cells=%d c=%g (%d sweeps)",
                     name, sn_order, num_cells, scattering_ratio, out.sweeps)
    if on_case is not None:
        on_case(problem, outcomes)
    return rec


def _run_case_args(args):
    return run_case(*args)


def generate(grid: FeatureGrid = None, template: SlabProblem = None, jobs: int = 1,
             on_case: Callable = None, progress: Callable = None) -> list:
    """One unlabeled :class:`CaseRecord` per grid point, in grid order.

    ``on_case(problem, outcomes)`` sees every full solve result (serial runs
    only).  Keep ``jobs=1`` whenever runtimes will be used for labels.
    """
    grid = FeatureGrid() if grid is None else grid
    template = SlabProblem() if template is None else template
    points = list(grid.points())
    if jobs > 1:
        if on_case is not None:
            raise ValueError("on_case callbacks require jobs=1")
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            args = [(template, n, i, c) for n, i, c in points]
            records = list(pool.map(_run_case_args, args, chunksize=16))
        if progress is not None:
            progress(len(records), len(points))
        return records
    records = []
    for n, i, c in points:
        records.append(run_case(template, n, i, c, on_case))
        if progress is not None:
            progress(len(records), len(points))
    return records


def label_best(records: Sequence[CaseRecord], criterion: str,
               tie_break: Sequence[str] = DEFAULT_TIE_BREAK) -> list:
    """Copies of ``records`` with the winner for ``criterion`` filled in.

    Unconverged solvers never win; exact ties go to the earliest entry of
    ``tie_break``.
    """
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}; choose from {CRITERIA}")
    if sorted(tie_break) != sorted(SOLVERS):
        raise ValueError(f"tie_break must order all of {SOLVERS}, got {tuple(tie_break)}")
    rank = {name: i for i, name in enumerate(tie_break)}
    out = []
    for rec in records:
        cost = rec.sweeps if criterion == "sweeps" else rec.runtime_seconds
        live = [s for s in SOLVERS if rec.converged.get(s)]
        if not live:
            raise LabelingError(
                f"no solver converged for N={rec.sn_order}, cells={rec.num_cells}, "
                f"c={rec.scattering_ratio}"
            )
        best = min(live, key=lambda s: (cost[s], rank[s]))
        field_name = "best_sweeps" if criterion == "sweeps" else "best_runtime"
        out.append(replace(rec, **{field_name: best}))
    return out


def label_distribution(records: Sequence[CaseRecord], criterion: str) -> dict:
    """Counts of each winning solver under ``criterion`` (unlabeled rows skipped)."""
    counts = {s: 0 for s in SOLVERS}
    for rec in records:
        lab = rec.label(criterion)
        if lab is not None:
            counts[lab] += 1
    return counts


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(records: Sequence[CaseRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in records:
            writer.writerow(
                [r.sn_order, r.num_cells, _fmt(r.scattering_ratio)]
                + [r.sweeps[s] for s in SOLVERS]
                + [_fmt(r.runtime_seconds[s]) for s in SOLVERS]
                + [int(bool(r.converged[s])) for s in SOLVERS]
                + [r.best_sweeps or "", r.best_runtime or ""]
            )


def _parse_label(value, lineno, column):
    if value == "":
        return None
    if value not in SOLVERS:
        raise DatasetFormatError(f"line {lineno}: column {column} has unknown solver {value!r}")
    return value


def _parse_bool(value, lineno, column):
    if value not in ("0", "1"):
        raise DatasetFormatError(f"line {lineno}: column {column} must be 0 or 1, got {value!r}")
    return value == "1"


def read_csv(path) -> list:
    """Load records written by :func:`write_csv`.

    Line numbers in errors count the header as line 1.
    """
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return records
        if len(header) != len(COLUMNS):
            raise DatasetFormatError(
                f"line 1: expected {len(COLUMNS)} columns, found {len(header)}"
            )
        if list(header) != COLUMNS:
            raise DatasetFormatError(f"line 1: header does not match schema {','.join(COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(COLUMNS):
                raise DatasetFormatError(
                    f"line {lineno}: expected {len(COLUMNS)} columns, found {len(row)}"
                )
            try:
                sn, cells = int(row[0]), int(row[1])
                ratio = float(row[2])
                sweeps = [int(v) for v in row[3:6]]
                times = [float(v) for v in row[6:9]]
            except ValueError as exc:
                raise DatasetFormatError(f"line {lineno}: non-numeric field ({exc})") from None
            conv = [_parse_bool(row[j], lineno, COLUMNS[j]) for j in range(9, 12)]
            records.append(CaseRecord(
                sn, cells, ratio,
                sweeps=dict(zip(SOLVERS, sweeps)),
                runtime_seconds=dict(zip(SOLVERS, times)),
                converged=dict(zip(SOLVERS, conv)),
                best_sweeps=_parse_label(row[12], lineno, "best_sweeps"),
                best_runtime=_parse_label(row[13], lineno, "best_runtime"),
            ))
    return records
