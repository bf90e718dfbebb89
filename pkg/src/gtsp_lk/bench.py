"""Benchmark harness: timed runs, time-bucket competition, distances to the
winners, relative running times and result tables."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import statistics
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Callable, Iterable, Mapping, Sequence

from .instance import GtspInstance, cluster_tsp, read_instance

logger = logging.getLogger(__name__)

DEFAULT_TAUS = (0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0)
HEAVY_INSTANCES = frozenset(
    {"35si175", "36brg180", "40d198", "53pr264", "107si535", "131p654", "207si1032"})
GROUP_ORDER = ("Tiniest", "Tiny", "Small", "Moderate", "Large", "Huge", "Giant")


@dataclass(frozen=True)
class RunRecord:
    """One timed run of heuristic ``heuristic`` on ``instance`` with run number ``run``."""

    heuristic: str
    instance: str
    run: int
    time: float
    weight: int | None
    best: int
    failed: bool = False

    @property
    def error(self) -> Fraction:
        if self.weight is None:
            raise ValueError("failed run has no error")
        return Fraction(self.weight - self.best, self.best)


# ---------------------------------------------------------------------------
# registries

def parse_best_known(text: str) -> dict[str, int]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"best-known line {lineno}: expected 'name weight', got {line!r}")
        out[parts[0]] = int(parts[1])
    return out


def parse_groups(text: str) -> dict[str, list[str]]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ValueError(f"group line {lineno}: expected 'group: a, b, ...'")
        name, members = line.split(":", 1)
        out[name.strip()] = [m.strip() for m in members.split(",") if m.strip()]
    return out


def _data_text(name: str) -> str:
    return resources.files("gtsp_lk").joinpath("data", name).read_text()


def default_best_known() -> dict[str, int]:
    """Published optimal or best-known weights of the standard test bed."""
    return parse_best_known(_data_text("best_known.txt"))


def default_groups() -> dict[str, list[str]]:
    """Competition groups Tiniest..Giant."""
    return parse_groups(_data_text("groups.txt"))


# ---------------------------------------------------------------------------
# running

Heuristic = Callable[[GtspInstance, int], object]


def run_matrix(instances: Mapping[str, GtspInstance] | Sequence[GtspInstance],
               heuristics: Mapping[str, Heuristic], best_known: Mapping[str, int],
               runs: int = 10, timer: Callable[[], float] = time.perf_counter,
               warmup: bool = True) -> list[RunRecord]:
    """Run every heuristic on every instance for run numbers ``1..runs``.

    A heuristic is called as ``h(instance, r)`` and must return an object
    with a ``weight`` attribute. Exceptions are recorded as failed runs.
    With ``warmup`` each heuristic first runs once, untimed, on the smallest
    instance so that compilation and cache loading stay out of the timings.
    """
    if not isinstance(instances, Mapping):
        instances = {inst.name: inst for inst in instances}
    missing = [name for name in instances if name not in best_known]
    if missing:
        raise KeyError(f"no best-known value for instance(s): {', '.join(missing)}")
    records = []
    smallest = min(instances.values(), key=lambda inst: inst.n, default=None)
    for label, heuristic in heuristics.items():
        if warmup and smallest is not None:
            try:
                heuristic(smallest, 1)
            except Exception:
                pass  # the timed runs record the failure
        for name, inst in instances.items():
            for r in range(1, runs + 1):
                r_eff = (r - 1) % inst.m + 1
                start = timer()
                try:
                    result = heuristic(inst, r_eff)
                    weight = int(result.weight)
                    failed = False
                except Exception as exc:  # recorded, reported, excluded
                    logger.warning("%s failed on %s run %d: %s", label, name, r, exc)
                    weight = None
                    failed = True
                elapsed = timer() - start
                records.append(RunRecord(label, name, r, elapsed, weight,
                                         int(best_known[name]), failed))
    return records


# ---------------------------------------------------------------------------
# competition

@dataclass(frozen=True)
class GroupStats:
    heuristic: str
    error: Fraction
    time: float
    max_time: float


@dataclass
class Cell:
    winner: GroupStats | None = None
    listed: list = field(default_factory=list)  # includes the winner first


@dataclass
class CompetitionReport:
    taus: tuple
    groups: tuple
    cells: dict  # (tau index, group) -> Cell
    stats: dict  # group -> {heuristic: GroupStats}

    def winner(self, i: int, group: str) -> str | None:
        cell = self.cells[(i, group)]
        return cell.winner.heuristic if cell.winner else None

    def populated(self):
        return [(i, g) for (i, g), c in self.cells.items() if c.winner is not None]


def group_stats(records: Iterable[RunRecord], groups: Mapping[str, Sequence[str]]) -> dict:
    """Mean error/time and worst time per (group, heuristic).

    A heuristic is rated on a group only if it has successful runs on every
    instance of the group and no failed run there.
    """
    by_key: dict = {}
    for rec in records:
        by_key.setdefault((rec.heuristic, rec.instance), []).append(rec)
    heuristics = sorted({h for h, _ in by_key})
    out = {}
    for group, members in groups.items():
        out[group] = {}
        for h in heuristics:
            recs = []
            complete = True
            for inst in members:
                rs = by_key.get((h, inst))
                if not rs or any(r.failed for r in rs):
                    complete = False
                    break
                recs.extend(rs)
            if not complete:
                continue
            out[group][h] = GroupStats(
                h, sum((r.error for r in recs), Fraction(0)) / len(recs),
                statistics.fmean(r.time for r in recs), max(r.time for r in recs))
    return out


def build_competition(records: Iterable[RunRecord], groups: Mapping[str, Sequence[str]],
                      taus: Sequence[float] = DEFAULT_TAUS) -> CompetitionReport:
    """Winner and co-listed heuristics for every (time limit, group) cell.

    Winner: every run fits the limit, the mean error is strictly below the
    previous winner of the column, then the smallest error, then the
    smallest mean time (then the label, for determinism). Co-listed entries
    also fit, also beat the previous winner, and stay within 1.1x the
    winner's error and 1.2x its time.
    """
    stats = group_stats(records, groups)
    cells = {}
    for group in groups:
        previous = None
        for i, tau in enumerate(taus):
            fitting = [s for s in stats[group].values() if s.max_time <= tau]
            if previous is not None:
                fitting = [s for s in fitting if s.error < previous.error]
            cell = Cell()
            if fitting:
                win = min(fitting, key=lambda s: (s.error, s.time, s.heuristic))
                cell.winner = win
                others = [s for s in fitting if s is not win
                          and s.error <= Fraction(11, 10) * win.error
                          and s.time <= 1.2 * win.time]
                others.sort(key=lambda s: (s.error, s.time, s.heuristic))
                cell.listed = [win] + others
                previous = win
            cells[(i, group)] = cell
    return CompetitionReport(tuple(taus), tuple(groups), cells, stats)


def distance_to_winners(report: CompetitionReport) -> dict[str, float]:
    """d(H): mean over groups of the relative error gap to the winner of the
    fastest cell that ``H`` fits in.

    An empty cell falls back to the closest non-empty cell above it. Groups
    where ``H`` fits no limit, or where that winner has zero error, are
    skipped with a warning.
    """
    per_h: dict = {}
    for group in report.groups:
        winners = []
        last = None
        for i in range(len(report.taus)):
            cell = report.cells[(i, group)]
            if cell.winner is not None:
                last = cell.winner
            winners.append(last)
        for h, s in report.stats[group].items():
            i = next((k for k, tau in enumerate(report.taus) if s.max_time <= tau), None)
            if i is None:
                logger.warning("%s fits no time limit on group %s; skipped", h, group)
                continue
            win = winners[i]
            if win is None:
                logger.warning("no winner at or above %s s for group %s", report.taus[i], group)
                continue
            if win.error == 0:
                logger.warning("winner %s has zero error on group %s; d_j(%s) undefined",
                               win.heuristic, group, h)
                continue
            per_h.setdefault(h, []).append(float((s.error - win.error) / win.error))
    return {h: statistics.fmean(v) for h, v in per_h.items()}


def relative_time(records: Iterable[RunRecord], baseline: str) -> dict[str, float]:
    """T(H): mean over runs of H's time divided by the baseline's mean time
    on the same instance."""
    records = [r for r in records if not r.failed]
    base: dict = {}
    for r in records:
        if r.heuristic == baseline:
            base.setdefault(r.instance, []).append(r.time)
    if not base:
        raise ValueError(f"baseline {baseline!r} has no records")
    base_mean = {k: statistics.fmean(v) for k, v in base.items()}
    ratios: dict = {}
    for r in records:
        if r.instance in base_mean and base_mean[r.instance] > 0:
            ratios.setdefault(r.heuristic, []).append(r.time / base_mean[r.instance])
    return {h: statistics.fmean(v) for h, v in ratios.items()}


# ---------------------------------------------------------------------------
# rendering

def percent(value) -> str:
    """One-decimal percentage of a fraction: 0.04932 -> '4.9'."""
    return f"{float(value) * 100:.1f}"


def _tau_label(tau: float) -> str:
    if tau < 1:
        ms = tau * 1000
        return f"<= {ms:g} ms"
    return f"<= {tau:g} s"


def _render(rows: list[list[str]], fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows)
        return buf.getvalue()
    if fmt == "markdown":
        header, body = rows[0], rows[1:]
        lines = ["| " + " | ".join(header) + " |",
                 "|" + "|".join("---" for _ in header) + "|"]
        lines += ["| " + " | ".join(r) + " |" for r in body]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def records_table(records: Iterable[RunRecord], fmt: str = "csv") -> str:
    rows = [["heuristic", "instance", "run", "time_s", "weight", "best", "error"]]
    for r in records:
        rows.append([r.heuristic, r.instance, str(r.run), f"{r.time:.6f}",
                     "" if r.weight is None else str(r.weight), str(r.best),
                     "" if r.failed else f"{float(r.error):.6f}"])
    return _render(rows, fmt)


def detail_table(records: Iterable[RunRecord], kind: str = "error", fmt: str = "markdown",
                 heavy: Iterable[str] = HEAVY_INSTANCES,
                 heuristics: Sequence[str] | None = None) -> str:
    """Per-instance mean error (%) or time (ms) with Average, Light avg and
    Heavy avg rows. Averages are taken over raw values; rounding happens
    only when rendering."""
    if kind not in ("error", "time"):
        raise ValueError("kind must be 'error' or 'time'")
    records = [r for r in records if not r.failed]
    heavy = set(heavy)
    if heuristics is None:
        heuristics = list(dict.fromkeys(r.heuristic for r in records))
    instances = list(dict.fromkeys(r.instance for r in records))
    best = {r.instance: r.best for r in records}
    cell: dict = {}
    for r in records:
        value = r.error if kind == "error" else Fraction(r.time).limit_denominator(10 ** 9)
        cell.setdefault((r.instance, r.heuristic), []).append(value)
    means = {k: sum(v, Fraction(0)) / len(v) for k, v in cell.items()}

    def show(v):
        if v is None:
            return "-"
        return percent(v) if kind == "error" else f"{float(v) * 1000:.2f}"

    header = ["Instance"] + (["Best"] if kind == "error" else []) + list(heuristics)
    rows = [header]
    for inst in instances:
        row = [inst] + ([str(best[inst])] if kind == "error" else [])
        row += [show(means.get((inst, h))) for h in heuristics]
        rows.append(row)

    def avg_row(label, names):
        row = [label] + ([""] if kind == "error" else [])
        for h in heuristics:
            vals = [means[(i, h)] for i in names if (i, h) in means]
            row.append(show(sum(vals, Fraction(0)) / len(vals) if vals else None))
        return row

    if instances:
        rows.append(avg_row("Average", instances))
        light = [i for i in instances if i not in heavy]
        heavy_list = [i for i in instances if i in heavy]
        if heavy_list:
            rows.append(avg_row("Light avg", light))
            rows.append(avg_row("Heavy avg", heavy_list))
    return _render(rows, fmt)


def competition_table(report: CompetitionReport, fmt: str = "markdown") -> str:
    rows = [["Time"] + list(report.groups)]
    for i, tau in enumerate(report.taus):
        row = [_tau_label(tau)]
        for g in report.groups:
            cell = report.cells[(i, g)]
            if cell.winner is None:
                row.append("—")
            else:
                row.append("; ".join(f"{s.heuristic} {percent(s.error)}" for s in cell.listed))
        rows.append(row)
    return _render(rows, fmt)


def summary_table(distances: Mapping[str, float], times: Mapping[str, float] | None = None,
                  fmt: str = "markdown") -> str:
    """d(H) in % and, when given, T(H) in % of the baseline time, fastest first."""
    names = list(distances)
    if times:
        names.sort(key=lambda h: (times.get(h, math.inf), h))
    else:
        names.sort(key=lambda h: (distances[h], h))
    header = ["Heuristic", "d(H) %"] + (["Time % of baseline"] if times else [])
    rows = [header]
    for h in names:
        row = [h, f"{distances[h] * 100:.0f}"]
        if times:
            row.append(f"{times[h] * 100:.2f}" if h in times else "-")
        rows.append(row)
    return _render(rows, fmt)


def emit_tables(report: CompetitionReport | None, records: Sequence[RunRecord],
                fmt: str = "markdown", baseline: str | None = None) -> dict[str, str]:
    """All renderings keyed by a file-friendly name."""
    out = {
        "records": records_table(records, "csv" if fmt == "csv" else "markdown"),
        "errors": detail_table(records, "error", fmt),
        "times": detail_table(records, "time", fmt),
    }
    if report is not None:
        out["competition"] = competition_table(report, fmt)
        times = relative_time(records, baseline) if baseline else None
        out["summary"] = summary_table(distance_to_winners(report), times, fmt)
    return out


# ---------------------------------------------------------------------------
# manifests

class ManifestError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid manifest:\n" + "\n".join(f"  - {p}" for p in problems))


@dataclass
class Manifest:
    instances: dict  # name -> GtspInstance
    regenerated: dict  # name -> bool
    heuristics: list
    groups: dict
    taus: tuple
    best_known: dict
    runs: int
    baseline: str | None


def load_manifest(path) -> Manifest:
    """Read a JSON manifest.

    Keys: ``instances`` (paths to GTSP files, or ``{"tsp": path, "sets": m}``
    to cluster a TSP file), ``heuristics`` (labels), optional ``groups``
    (path or mapping), ``taus``, ``best_known`` (path or mapping, defaults to
    the bundled registry), ``runs`` (default 10) and ``baseline``. Relative
    paths are resolved against the manifest's directory.
    """
    base = os.path.dirname(os.path.abspath(path))
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ManifestError([f"not valid JSON: {exc}"]) from None
    problems = []

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    best = data.get("best_known")
    if best is None:
        best = default_best_known()
    elif isinstance(best, str):
        try:
            with open(resolve(best)) as fh:
                best = parse_best_known(fh.read())
        except OSError as exc:
            problems.append(f"best_known: {exc}")
            best = {}
    else:
        best = {k: int(v) for k, v in best.items()}

    instances, regenerated = {}, {}
    entries = data.get("instances")
    if not entries:
        problems.append("instances: at least one instance is required")
        entries = []
    for entry in entries:
        try:
            if isinstance(entry, str):
                inst = read_instance(resolve(entry))
                regenerated[inst.name] = False
            else:
                tsp = read_instance(resolve(entry["tsp"]))
                inst = cluster_tsp(tsp, entry.get("sets"))
                regenerated[inst.name] = True
        except (OSError, ValueError, KeyError) as exc:
            problems.append(f"instance {entry!r}: {exc}")
            continue
        instances[inst.name] = inst
    for name in instances:
        if name not in best:
            problems.append(f"instance {name}: no best-known value")

    heuristics = data.get("heuristics") or []
    if not heuristics:
        problems.append("heuristics: at least one heuristic is required")
    from .estimators import make_heuristic
    for label in heuristics:
        try:
            make_heuristic(label)
        except ValueError as exc:
            problems.append(f"heuristic {label!r}: {exc}")

    groups = data.get("groups")
    if groups is None:
        groups = {"all": list(instances)}
    elif isinstance(groups, str):
        try:
            with open(resolve(groups)) as fh:
                groups = parse_groups(fh.read())
        except OSError as exc:
            problems.append(f"groups: {exc}")
            groups = {}
    groups = {g: [i for i in members if i in instances] for g, members in groups.items()}
    groups = {g: members for g, members in groups.items() if members}

    taus = tuple(float(t) for t in data.get("taus", DEFAULT_TAUS))
    if list(taus) != sorted(taus) or any(t <= 0 for t in taus):
        problems.append("taus: must be positive and increasing")
    runs = data.get("runs", 10)
    if not isinstance(runs, int) or runs < 1:
        problems.append("runs: must be a positive integer")
    baseline = data.get("baseline")
    if baseline is not None and baseline not in heuristics:
        problems.append(f"baseline {baseline!r} is not among the heuristics")
    if problems:
        raise ManifestError(problems)
    return Manifest(instances, regenerated, list(heuristics), groups, taus, best, runs, baseline)


def run_manifest(manifest: Manifest, out_dir: str,
                 timer: Callable[[], float] = time.perf_counter) -> dict[str, str]:
    """Run a manifest and write records.csv, competition.md, summary.md and
    the detail tables into ``out_dir``. Returns the written paths."""
    from .estimators import make_heuristic
    heuristics = {label: make_heuristic(label).as_callable() for label in manifest.heuristics}
    records = run_matrix(manifest.instances, heuristics, manifest.best_known,
                         manifest.runs, timer)
    report = build_competition(records, manifest.groups, manifest.taus)
    os.makedirs(out_dir, exist_ok=True)
    written = {}

    def write(name, text):
        p = os.path.join(out_dir, name)
        with open(p, "w", newline="") as fh:
            fh.write(text)
        written[name] = p

    write("records.csv", records_table(records, "csv"))
    write("competition.md", competition_table(report, "markdown"))
    times = relative_time(records, manifest.baseline) if manifest.baseline else None
    write("summary.md", summary_table(distance_to_winners(report), times, "markdown"))
    write("errors.md", detail_table(records, "error", "markdown"))
    write("times.md", detail_table(records, "time", "markdown"))
    sources = "\n".join(f"{name}: {'regenerated' if regen else 'archived'}"
                        for name, regen in manifest.regenerated.items())
    write("instances.txt", sources + "\n")
    return written
