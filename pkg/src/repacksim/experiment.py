"""Experiment grid: one instance, several value profiles, several
(scoring, checker) cells, every cell compared to the exact benchmark over its
own participant set.

Seed derivation is documented and pure: every seed is
``SeedSequence([master_seed, stream, *indices]).generate_state(1)[0]`` with
stream 10 for value profiles and stream 11 for auction tie-breaking. Two runs
with the same config and master seed therefore produce byte-identical output
files.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .auction import AuctionConfig, CheckerKind, determine_participants, run_auction
from .feasibility import Budget
from .instances import (
    GeneratorParams,
    ValueSamplerParams,
    generate_instance,
    parse_instance,
    sample_values,
)
from .metrics import ComparisonRecord, compare
from .model import ClearingTarget, Instance
from .pricing import (
    DEFAULT_C0_FCC,
    DEFAULT_C0_UNSCORED,
    ScoringRule,
    volumes_for,
)
from .vcg import DEFAULT_NODE_BUDGET, ResourceLimitError, vcg_outcome

_VALUES_STREAM = 10
_AUCTION_STREAM = 11

CSV_HEADER = "cell,profile,cost_fraction,value_loss_ratio,timeouts,rounds"


@dataclass(frozen=True)
class Cell:
    scoring: ScoringRule
    checker: CheckerKind

    @property
    def key(self) -> str:
        return f"{self.scoring.value}:{self.checker.value}"

    @staticmethod
    def parse(text: str) -> "Cell":
        try:
            scoring, checker = text.strip().split(":")
            return Cell(ScoringRule(scoring), CheckerKind(checker))
        except ValueError as exc:
            raise ValueError(
                f"cell {text!r} must look like 'fcc:sat' with a known scoring "
                f"rule and checker"
            ) from exc


DEFAULT_CELLS: tuple[Cell, ...] = (
    Cell(ScoringRule.FCC, CheckerKind.SAT),
    Cell(ScoringRule.FCC, CheckerKind.GREEDY),
    Cell(ScoringRule.UNSCORED, CheckerKind.SAT),
    Cell(ScoringRule.UNSCORED, CheckerKind.GREEDY),
    Cell(ScoringRule.UNSCORED, CheckerKind.EXHAUSTIVE),
)


@dataclass(frozen=True)
class ExperimentConfig:
    bar_c: int
    instance_path: str | None = None
    generator: GeneratorParams | None = None
    n_value_profiles: int = 5
    log_mean: float = 8.0
    log_sd: float = 1.0
    population_exponent: float = 0.7
    cells: tuple[Cell, ...] = DEFAULT_CELLS
    c0_fcc: float = DEFAULT_C0_FCC
    c0_unscored: float = DEFAULT_C0_UNSCORED
    budget_steps: int = 50_000
    master_seed: int = 0
    vcg_node_budget: int = DEFAULT_NODE_BUDGET
    out_dir: str = "out"

    def __post_init__(self) -> None:
        if (self.instance_path is None) == (self.generator is None):
            raise ValueError("configure exactly one of instance_path or generator")
        if self.n_value_profiles < 1:
            raise ValueError("need at least one value profile")
        if not self.cells:
            raise ValueError("need at least one cell")

    def c0_for(self, scoring: ScoringRule) -> float:
        return self.c0_fcc if scoring is ScoringRule.FCC else self.c0_unscored

    def load_instance(self) -> Instance:
        if self.instance_path is not None:
            return parse_instance(Path(self.instance_path).read_text())
        assert self.generator is not None
        return generate_instance(self.generator)


def config_from_mapping(data: dict) -> ExperimentConfig:
    """Build a config from parsed JSON; see the module docstring of
    :mod:`repacksim.cli` for the schema."""
    known = dict(data)
    generator = known.pop("generator", None)
    cells = known.pop("cells", None)
    sampler = known.pop("sampler", None)
    kwargs: dict = {}
    if generator is not None:
        kwargs["generator"] = GeneratorParams(**generator)
    if cells is not None:
        kwargs["cells"] = tuple(Cell.parse(c) for c in cells)
    if sampler is not None:
        for key in ("log_mean", "log_sd", "population_exponent"):
            if key in sampler:
                kwargs[key] = sampler[key]
    kwargs.update(known)
    return ExperimentConfig(**kwargs)


def derive_seed(master_seed: int, stream: int, *indices: int) -> int:
    """Documented hash from (master seed, stream, indices) to a 32-bit seed."""
    seq = np.random.SeedSequence([master_seed, stream, *indices])
    return int(seq.generate_state(1)[0])


@dataclass(frozen=True)
class RecordRow:
    cell: str
    profile: int
    record: ComparisonRecord | None
    incomparable: bool = False
    reason: str = ""


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    rows: tuple[RecordRow, ...]

    @property
    def any_incomparable(self) -> bool:
        return any(r.incomparable for r in self.rows)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every (cell, profile) auction and compare each against the exact
    benchmark computed once per distinct participant set per profile."""
    inst = cfg.load_instance()
    ct = ClearingTarget(cfg.bar_c)
    budget = Budget(step_limit=cfg.budget_steps)
    rows: list[RecordRow] = []

    for profile in range(cfg.n_value_profiles):
        sampler = ValueSamplerParams(
            log_mean=cfg.log_mean,
            log_sd=cfg.log_sd,
            population_exponent=cfg.population_exponent,
            seed=derive_seed(cfg.master_seed, _VALUES_STREAM, profile),
        )
        values = sample_values(inst, sampler)
        benchmark_cache: dict[frozenset, object] = {}

        for cell_index, cell in enumerate(cfg.cells):
            c0 = cfg.c0_for(cell.scoring)
            volumes = volumes_for(inst, ct, cell.scoring)
            participants, non_participants = determine_participants(
                inst, values, volumes, c0
            )
            key = frozenset(participants)
            if key not in benchmark_cache:
                try:
                    benchmark_cache[key] = vcg_outcome(
                        inst,
                        values,
                        participants,
                        non_participants,
                        ct,
                        node_budget=cfg.vcg_node_budget,
                    )
                except ResourceLimitError as exc:
                    benchmark_cache[key] = exc
            benchmark = benchmark_cache[key]

            config = AuctionConfig(
                ct=ct,
                scoring=cell.scoring,
                c0=c0,
                checker=cell.checker,
                budget=budget,
                seed=derive_seed(cfg.master_seed, _AUCTION_STREAM, cell_index, profile),
            )
            outcome = run_auction(inst, values, config)
            if isinstance(benchmark, ResourceLimitError):
                rows.append(
                    RecordRow(cell.key, profile, None, True, str(benchmark))
                )
            else:
                rows.append(
                    RecordRow(cell.key, profile, compare(outcome, benchmark, values))
                )

    rows.sort(key=lambda r: (r.cell, r.profile))
    return ExperimentResult(cfg, tuple(rows))


def _fmt(x: float) -> str:
    return repr(float(x))


def records_csv(result: ExperimentResult) -> str:
    lines = [CSV_HEADER]
    for row in result.rows:
        if row.record is None:
            lines.append(f"{row.cell},{row.profile},nan,nan,0,0")
        else:
            r = row.record
            lines.append(
                f"{row.cell},{row.profile},{_fmt(r.cost_fraction)},"
                f"{_fmt(r.value_loss_ratio)},{r.checker_timeout_count},{r.rounds}"
            )
    return "\n".join(lines) + "\n"


def records_json(result: ExperimentResult) -> str:
    cfg = result.config
    cfg_data = asdict(cfg)
    cfg_data["cells"] = [c.key for c in cfg.cells]
    # the output location is not part of the experiment's identity
    del cfg_data["out_dir"]
    records = []
    for row in result.rows:
        entry: dict = {
            "cell": row.cell,
            "profile": row.profile,
            "incomparable": row.incomparable,
        }
        if row.incomparable:
            entry["reason"] = row.reason
        if row.record is not None:
            entry.update(asdict(row.record))
        records.append(entry)
    return json.dumps(
        {"config": cfg_data, "records": records}, sort_keys=True, indent=1
    ) + "\n"


def write_outputs(result: ExperimentResult, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "records.csv"
    json_path = out / "records.json"
    csv_path.write_text(records_csv(result))
    json_path.write_text(records_json(result))
    return csv_path, json_path


def _mean(xs: list[float]) -> float:
    return sum(xs) / len(xs) if xs else math.nan


@dataclass(frozen=True)
class CellSummary:
    cell: str
    n: int
    mean_cost_fraction: float
    mean_value_loss_ratio: float
    mean_cost: float
    mean_value_loss: float
    infinite_ratios: int


def summarize(rows: Iterable[RecordRow]) -> list[CellSummary]:
    by_cell: dict[str, list[ComparisonRecord]] = {}
    for row in rows:
        if row.record is not None:
            by_cell.setdefault(row.cell, []).append(row.record)
    summaries = []
    for cell in sorted(by_cell):
        recs = by_cell[cell]
        finite_ratio = [r.value_loss_ratio for r in recs if math.isfinite(r.value_loss_ratio)]
        finite_frac = [r.cost_fraction for r in recs if math.isfinite(r.cost_fraction)]
        summaries.append(
            CellSummary(
                cell=cell,
                n=len(recs),
                mean_cost_fraction=_mean(finite_frac),
                mean_value_loss_ratio=_mean(finite_ratio),
                mean_cost=_mean([r.cost_auction for r in recs]),
                mean_value_loss=_mean([r.value_loss_auction for r in recs]),
                infinite_ratios=sum(
                    1 for r in recs if not math.isfinite(r.value_loss_ratio)
                ),
            )
        )
    return summaries


def report_text(rows: Iterable[RecordRow]) -> str:
    """Per-cell means plus the cross-cell comparisons: naive over complete
    checker cost, scored over unscored cost, and mean value loss ratios."""
    rows = list(rows)
    summaries = summarize(rows)
    by_cell = {s.cell: s for s in summaries}
    lines = ["cell summaries (means over comparable records)"]
    for s in summaries:
        lines.append(
            f"  {s.cell}: n={s.n} mean_cost_fraction={s.mean_cost_fraction:.6g} "
            f"mean_value_loss_ratio={s.mean_value_loss_ratio:.6g} "
            f"mean_cost={s.mean_cost:.6g} mean_value_loss={s.mean_value_loss:.6g}"
            + (f" infinite_ratios={s.infinite_ratios}" if s.infinite_ratios else "")
        )
    lines.append("cross-cell comparisons")
    for scoring in ("fcc", "unscored"):
        naive = by_cell.get(f"{scoring}:greedy")
        complete = by_cell.get(f"{scoring}:sat")
        if naive and complete and complete.mean_cost > 0:
            lines.append(
                f"  naive/complete checker cost ratio [{scoring}] = "
                f"{naive.mean_cost / complete.mean_cost:.6g}"
            )
        if naive and complete and complete.mean_value_loss > 0:
            lines.append(
                f"  naive/complete checker value loss ratio [{scoring}] = "
                f"{naive.mean_value_loss / complete.mean_value_loss:.6g}"
            )
    for checker in ("sat", "greedy", "exhaustive"):
        scored = by_cell.get(f"fcc:{checker}")
        unscored = by_cell.get(f"unscored:{checker}")
        if scored and unscored and unscored.mean_cost > 0:
            lines.append(
                f"  scored/unscored cost ratio [{checker}] = "
                f"{scored.mean_cost / unscored.mean_cost:.6g}"
            )
    for s in summaries:
        lines.append(f"  mean value loss ratio [{s.cell}] = {s.mean_value_loss_ratio:.6g}")
    return "\n".join(lines) + "\n"


def scatter_csv(rows: Iterable[RecordRow]) -> str:
    """Per-record scatter points plus the benchmark reference, which sits at
    (1, 1) by construction for every profile."""
    rows = list(rows)
    lines = [CSV_HEADER]
    profiles = sorted({r.profile for r in rows})
    for row in rows:
        if row.record is None:
            lines.append(f"{row.cell},{row.profile},nan,nan,0,0")
        else:
            r = row.record
            lines.append(
                f"{row.cell},{row.profile},{_fmt(r.cost_fraction)},"
                f"{_fmt(r.value_loss_ratio)},{r.checker_timeout_count},{r.rounds}"
            )
    for profile in profiles:
        lines.append(f"vcg,{profile},1.0,1.0,0,0")
    return "\n".join(lines) + "\n"


def rows_from_json(text: str) -> list[RecordRow]:
    """Rebuild record rows from a records.json document."""
    data = json.loads(text)
    rows = []
    for entry in data["records"]:
        if entry.get("incomparable"):
            rows.append(
                RecordRow(
                    entry["cell"], entry["profile"], None, True, entry.get("reason", "")
                )
            )
            continue
        record = ComparisonRecord(
            value_loss_auction=entry["value_loss_auction"],
            value_loss_optimal=entry["value_loss_optimal"],
            value_loss_ratio=entry["value_loss_ratio"],
            cost_auction=entry["cost_auction"],
            cost_vcg=entry["cost_vcg"],
            cost_fraction=entry["cost_fraction"],
            checker_timeout_count=entry["checker_timeout_count"],
            rounds=entry["rounds"],
        )
        rows.append(RecordRow(entry["cell"], entry["profile"], record))
    return rows
