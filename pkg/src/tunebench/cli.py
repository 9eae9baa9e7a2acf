"""Command-line interface for the benchmarking pipeline.

Subcommands cover the full workflow: ``generate`` runs random search and
writes trial records, ``calibrate`` refits priors from those records,
``analyze`` turns a trial library into expected-best-at-budget curves,
``summarize`` reduces curves to tunability tables, ``prob-best`` and
``time-curve`` run the Monte-Carlo comparisons, and ``plot`` renders any
of the CSV outputs as self-contained SVG charts.

Every command is deterministic for fixed inputs and flags: floats are
written with 17 significant digits, row order is fixed, and reruns
produce byte-identical files.

Exit codes: 0 success, 2 bad configuration or usage, 3 calibration
failure, 4 inconsistent result grid, 5 missing record fields, 6
malformed input files.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from tunebench import aggregate, estimator
from tunebench.core import Direction, Trial, TrialLibrary
from tunebench.hpo import random_search, time_budget_curve
from tunebench.optim import optimizer_spec
from tunebench.priors import (
    Distribution,
    Fixed,
    LogNormal,
    LogUniform10,
    OneMinusLogUniform10,
    PriorSpec,
    Uniform,
    calibrate,
    default_priors,
    retained_trials,
)
from tunebench.tasks import make_task, task_ids

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CALIBRATION = 3
EXIT_GRID = 4
EXIT_MISSING_FIELD = 5
EXIT_PARSE = 6

SCHEMA_VERSION = 1


class CliError(Exception):
    """Error with a process exit code attached."""

    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


def _fmt(value) -> str:
    """Fixed-width-free but round-trippable cell formatting."""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _read_csv(path: Path) -> tuple[tuple[str, ...], list[list[str]]]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = tuple(next(reader))
            except StopIteration:
                raise CliError(EXIT_PARSE, f"{path}: empty CSV")
            rows = [row for row in reader if row]
    except OSError as err:
        raise CliError(EXIT_CONFIG, str(err))
    if not rows:
        raise CliError(EXIT_PARSE, f"{path}: no data rows")
    return header, rows


# --- trial records ---------------------------------------------------------

_RECORD_FIELDS = (
    "optimizer",
    "task",
    "seed",
    "config",
    "objective",
    "direction",
    "update_steps",
    "epochs_run",
    "diverged",
    "schema_version",
)


def trial_to_record(trial: Trial) -> dict:
    return {
        "optimizer": trial.optimizer_id,
        "task": trial.task_id,
        "seed": trial.seed,
        "config": {k: float(v) for k, v in trial.config.items()},
        "objective": None if trial.objective is None else float(trial.objective),
        "direction": trial.direction.value,
        "update_steps": trial.update_steps,
        "epochs_run": trial.epochs_run,
        "diverged": trial.diverged,
        "schema_version": SCHEMA_VERSION,
    }


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def record_to_trial(record: dict, where: str) -> Trial:
    """Validate one decoded JSONL record and build the trial.

    Missing fields exit with code 5, anything else malformed with 6.
    """
    if not isinstance(record, dict):
        raise CliError(EXIT_PARSE, f"{where}: record is not a JSON object")
    for name in _RECORD_FIELDS:
        if name not in record:
            raise CliError(EXIT_MISSING_FIELD, f"{where}: missing field {name!r}")
    unknown = set(record) - set(_RECORD_FIELDS)
    if unknown:
        raise CliError(EXIT_PARSE, f"{where}: unknown field {sorted(unknown)[0]!r}")
    if record["schema_version"] != SCHEMA_VERSION:
        raise CliError(
            EXIT_PARSE,
            f"{where}: unsupported schema_version {record['schema_version']!r}",
        )
    if not isinstance(record["optimizer"], str) or not isinstance(record["task"], str):
        raise CliError(EXIT_PARSE, f"{where}: optimizer and task must be strings")
    for name in ("seed", "update_steps", "epochs_run"):
        if not _is_int(record[name]):
            raise CliError(EXIT_PARSE, f"{where}: {name} must be an integer")
    if not isinstance(record["diverged"], bool):
        raise CliError(EXIT_PARSE, f"{where}: diverged must be a boolean")
    config = record["config"]
    if not isinstance(config, dict) or not all(
        isinstance(k, str) and _is_number(v) for k, v in config.items()
    ):
        raise CliError(EXIT_PARSE, f"{where}: config must map names to numbers")
    objective = record["objective"]
    if objective is not None and not _is_number(objective):
        raise CliError(EXIT_PARSE, f"{where}: objective must be a number or null")
    try:
        direction = Direction(record["direction"])
    except ValueError:
        raise CliError(EXIT_PARSE, f"{where}: direction must be 'min' or 'max'")
    try:
        return Trial(
            optimizer_id=record["optimizer"],
            task_id=record["task"],
            seed=record["seed"],
            config={k: float(v) for k, v in config.items()},
            objective=None if objective is None else float(objective),
            direction=direction,
            update_steps=record["update_steps"],
            epochs_run=record["epochs_run"],
            diverged=record["diverged"],
        )
    except ValueError as err:
        raise CliError(EXIT_PARSE, f"{where}: {err}")


def write_trials(path: Path, trials: Sequence[Trial]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for trial in trials:
            fh.write(json.dumps(trial_to_record(trial)) + "\n")


def read_trials(path: Path) -> list[Trial]:
    trials = []
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as err:
        raise CliError(EXIT_CONFIG, str(err))
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        where = f"{path}:{lineno}"
        try:
            record = json.loads(line)
        except json.JSONDecodeError as err:
            raise CliError(EXIT_PARSE, f"{where}: invalid JSON ({err.msg})")
        trials.append(record_to_trial(record, where))
    if not trials:
        raise CliError(EXIT_PARSE, f"{path}: no trial records")
    return trials


def _load_libraries(paths: Sequence[str]) -> dict[tuple[str, str], TrialLibrary]:
    """Group records from all files into one library per (optimizer, task)."""
    grouped: dict[tuple[str, str], list[Trial]] = {}
    for path in paths:
        for trial in read_trials(Path(path)):
            grouped.setdefault((trial.optimizer_id, trial.task_id), []).append(trial)
    libraries = {}
    for key, trials in grouped.items():
        try:
            libraries[key] = TrialLibrary.from_trials(trials)
        except ValueError as err:
            raise CliError(EXIT_PARSE, f"{key[0]}/{key[1]}: {err}")
    return libraries


# --- prior files ------------------------------------------------------------

_DIST_CODECS: dict[type, tuple[str, tuple[str, ...]]] = {
    LogNormal: ("log_normal", ("mu", "sigma")),
    LogUniform10: ("log_uniform10", ("low", "high")),
    Uniform: ("uniform", ("low", "high")),
    OneMinusLogUniform10: ("one_minus_log_uniform10", ("low", "high")),
    Fixed: ("fixed", ("value",)),
}
_DIST_DECODERS = {family: (cls, fields) for cls, (family, fields) in _DIST_CODECS.items()}


def prior_to_json(
    optimizer_id: str,
    retention: float,
    retained_counts: dict[str, int],
    prior: PriorSpec,
) -> str:
    distributions = {}
    for name in prior.names():
        dist = prior.distributions[name]
        family, fields = _DIST_CODECS[type(dist)]
        spec = {"family": family}
        for field in fields:
            spec[field] = float(getattr(dist, field))
        distributions[name] = spec
    payload = {
        "optimizer": optimizer_id,
        "retention": retention,
        "retained": retained_counts,
        "distributions": distributions,
        "schema_version": SCHEMA_VERSION,
    }
    return json.dumps(payload, indent=2) + "\n"


def prior_from_json(text: str, where: str) -> tuple[str, PriorSpec]:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as err:
        raise CliError(EXIT_PARSE, f"{where}: invalid JSON ({err.msg})")
    try:
        if payload["schema_version"] != SCHEMA_VERSION:
            raise CliError(EXIT_PARSE, f"{where}: unsupported schema_version")
        distributions: dict[str, Distribution] = {}
        for name, spec in payload["distributions"].items():
            cls, fields = _DIST_DECODERS[spec["family"]]
            distributions[name] = cls(**{f: spec[f] for f in fields})
        return payload["optimizer"], PriorSpec(distributions)
    except (KeyError, TypeError, ValueError) as err:
        raise CliError(EXIT_PARSE, f"{where}: malformed prior file ({err})")


# --- generate ---------------------------------------------------------------

_TASK_OVERRIDE_KEYS = {
    "quadratic": ("dim", "seed", "batch_size", "max_epochs", "train_size"),
    "logreg": ("n", "dim", "seed", "batch_size", "max_epochs"),
    "mlp": ("seed", "n", "batch_size", "max_epochs"),
}

_SEARCH_KEYS = ("optimizers", "tasks", "trials", "seed")


def _split_names(raw: str) -> list[str]:
    return [part for chunk in raw.split(",") for part in chunk.split() if part]


def parse_search_config(text: str, where: str):
    """Read the line-oriented generate configuration.

    Returns (optimizer ids, task ids, trials, seed, task overrides).
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=where)
    except configparser.Error as err:
        raise CliError(EXIT_CONFIG, f"{where}: {err}")
    if "search" not in parser:
        raise CliError(EXIT_CONFIG, f"{where}: missing [search] section")
    search = parser["search"]
    for key in search:
        if key not in _SEARCH_KEYS:
            raise CliError(EXIT_CONFIG, f"{where}: unknown search key {key!r}")
    for key in ("optimizers", "tasks"):
        if key not in search:
            raise CliError(EXIT_CONFIG, f"{where}: [search] must set {key!r}")
    optimizers = _split_names(search["optimizers"])
    tasks = _split_names(search["tasks"])
    if not optimizers or not tasks:
        raise CliError(EXIT_CONFIG, f"{where}: optimizers and tasks must be nonempty")

    def _int_option(section, key: str, default: int, minimum: int) -> int:
        raw = section.get(key)
        if raw is None:
            return default
        try:
            value = int(raw)
        except ValueError:
            raise CliError(EXIT_CONFIG, f"{where}: {key} must be an integer, got {raw!r}")
        if value < minimum:
            raise CliError(EXIT_CONFIG, f"{where}: {key} must be >= {minimum}")
        return value

    trials = _int_option(search, "trials", 100, 1)
    seed = _int_option(search, "seed", 0, 0)

    overrides: dict[str, dict[str, int]] = {}
    for section in parser.sections():
        if section == "search":
            continue
        if not section.startswith("task."):
            raise CliError(EXIT_CONFIG, f"{where}: unknown section [{section}]")
        task_id = section[len("task."):]
        if task_id not in _TASK_OVERRIDE_KEYS:
            known = ", ".join(task_ids())
            raise CliError(EXIT_CONFIG, f"{where}: unknown task {task_id!r} (known: {known})")
        allowed = _TASK_OVERRIDE_KEYS[task_id]
        values = {}
        for key in parser[section]:
            if key not in allowed:
                raise CliError(
                    EXIT_CONFIG, f"{where}: unknown key {key!r} in [{section}]"
                )
            values[key] = _int_option(parser[section], key, 0, 0)
        overrides[task_id] = values

    for task_id in tasks:
        if task_id not in _TASK_OVERRIDE_KEYS:
            known = ", ".join(task_ids())
            raise CliError(EXIT_CONFIG, f"{where}: unknown task {task_id!r} (known: {known})")
    return optimizers, tasks, trials, seed, overrides


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(args) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as err:
        raise CliError(EXIT_CONFIG, str(err))
    optimizers, tasks, trials, seed, overrides = parse_search_config(text, args.config)

    specs = []
    for oid in optimizers:
        try:
            specs.append(optimizer_spec(oid))
        except ValueError as err:
            raise CliError(EXIT_CONFIG, str(err))

    priors = {}
    for spec in specs:
        if args.priors is not None:
            prior_path = Path(args.priors) / f"prior_{spec.optimizer_id}.json"
            try:
                text = prior_path.read_text(encoding="utf-8")
            except OSError as err:
                raise CliError(EXIT_CONFIG, f"no prior file for {spec.optimizer_id!r}: {err}")
            _, priors[spec.optimizer_id] = prior_from_json(text, str(prior_path))
        else:
            priors[spec.optimizer_id] = default_priors(spec.optimizer_id)

    instances = {}
    for tid in tasks:
        try:
            instances[tid] = make_task(tid, **overrides.get(tid, {}))
        except (TypeError, ValueError) as err:
            raise CliError(EXIT_CONFIG, f"task {tid!r}: {err}")

    out = _out_dir(args)
    for oi, spec in enumerate(specs):
        for ti, tid in enumerate(tasks):
            master = int(np.random.SeedSequence((seed, oi, ti)).generate_state(1)[0])
            try:
                run = random_search(spec, priors[spec.optimizer_id], instances[tid], trials, master)
            except ValueError as err:
                raise CliError(EXIT_CONFIG, str(err))
            path = out / f"{spec.optimizer_id}__{tid}.jsonl"
            write_trials(path, run.trials)
            print(path)
    return EXIT_OK


# --- calibrate ---------------------------------------------------------------

def cmd_calibrate(args) -> int:
    if args.retention <= 0:
        raise CliError(EXIT_CONFIG, "--retention must be positive")
    grouped: dict[str, list[Trial]] = {}
    for path in args.files:
        for trial in read_trials(Path(path)):
            grouped.setdefault(trial.optimizer_id, []).append(trial)
    out = _out_dir(args)
    for oid, trials in grouped.items():
        try:
            prior = calibrate(trials, retention=args.retention)
            kept = retained_trials(trials, retention=args.retention)
        except ValueError as err:
            raise CliError(EXIT_CALIBRATION, f"{oid}: {err}")
        counts: dict[str, int] = {}
        for trial in kept:
            counts[trial.task_id] = counts.get(trial.task_id, 0) + 1
        path = out / f"prior_{oid}.json"
        path.write_text(prior_to_json(oid, args.retention, counts, prior), encoding="utf-8")
        print(path)
    return EXIT_OK


# --- analyze -----------------------------------------------------------------

_CURVE_HEADER = ("optimizer", "task", "direction", "budget", "mean", "variance", "q25", "q50", "q75")


def parse_budgets(text: str) -> list[int]:
    """Budget list syntax: comma-separated integers, ``A..B`` for ranges."""
    budgets: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                lo_text, hi_text = part.split("..", 1)
                lo, hi = int(lo_text), int(hi_text)
                if hi < lo:
                    raise CliError(EXIT_CONFIG, f"empty budget range {part!r}")
                budgets.extend(range(lo, hi + 1))
            else:
                budgets.append(int(part))
        except ValueError:
            raise CliError(EXIT_CONFIG, f"bad budget {part!r}")
    if not budgets or any(b < 1 for b in budgets):
        raise CliError(EXIT_CONFIG, "budgets must be positive integers")
    return budgets


def _effective_budgets(budgets: Sequence[int], size: int, label: str) -> list[int]:
    """Clamp requested budgets to the library size, warning once per clamp."""
    seen = set()
    out = []
    for budget in budgets:
        if budget > size:
            print(
                f"tunebench: warning: budget {budget} exceeds the {size}-trial "
                f"library for {label}; clamping",
                file=sys.stderr,
            )
            budget = size
        if budget not in seen:
            seen.add(budget)
            out.append(budget)
    return out


def cmd_analyze(args) -> int:
    libraries = _load_libraries(args.files)
    budgets = None if args.budget is None else parse_budgets(args.budget)
    if budgets is None:
        budgets = list(range(1, min(len(lib) for lib in libraries.values()) + 1))
    rows = []
    for (oid, tid), lib in libraries.items():
        effective = _effective_budgets(budgets, len(lib), f"{oid}/{tid}")
        if args.bootstrap is None:
            objectives = lib.analysis_objectives()
            for budget in effective:
                dist = estimator.best_at_distribution(objectives, budget, lib.direction)
                rows.append(
                    (
                        oid,
                        tid,
                        lib.direction.value,
                        budget,
                        dist.mean(),
                        dist.variance(),
                        dist.quantile(0.25),
                        dist.quantile(0.50),
                        dist.quantile(0.75),
                    )
                )
        else:
            if args.bootstrap < 1:
                raise CliError(EXIT_CONFIG, "--bootstrap must be a positive repetition count")
            for budget in effective:
                runs = estimator.bootstrap_runs(lib, budget, args.bootstrap, args.seed)
                finals = np.array([trace.values[-1] for trace in runs])
                rows.append(
                    (
                        oid,
                        tid,
                        lib.direction.value,
                        budget,
                        finals.mean(),
                        finals.var(),
                        np.quantile(finals, 0.25),
                        np.quantile(finals, 0.50),
                        np.quantile(finals, 0.75),
                    )
                )
    out = _out_dir(args)
    path = out / "curves.csv"
    _write_csv(path, _CURVE_HEADER, rows)
    print(path)
    return EXIT_OK


# --- summarize ---------------------------------------------------------------

_RELATIVE_HEADER = ("task", "optimizer", "budget", "score", "score_shift")
_TUNABILITY_HEADER = ("task", "optimizer", "scheme", "value")
_ALPHA_HEADER = ("task", "optimizer", "metric", "value", "score_shift")


def _read_curves(path: Path):
    """Parse an analyze CSV back into per-pair mean traces.

    Returns (task order, optimizer order, direction per task,
    means[task][optimizer] as arrays over the common budget grid, budgets).
    """
    header, raw_rows = _read_csv(path)
    if header != _CURVE_HEADER:
        raise CliError(EXIT_PARSE, f"{path}: expected analyze output columns {_CURVE_HEADER}")
    tasks: list[str] = []
    optimizers: list[str] = []
    directions: dict[str, str] = {}
    points: dict[tuple[str, str], list[tuple[int, float]]] = {}
    for row in raw_rows:
        if len(row) != len(header):
            raise CliError(EXIT_PARSE, f"{path}: row with {len(row)} cells")
        oid, tid, direction = row[0], row[1], row[2]
        try:
            budget = int(row[3])
            mean = float(row[4])
        except ValueError:
            raise CliError(EXIT_PARSE, f"{path}: non-numeric budget or mean")
        if tid not in tasks:
            tasks.append(tid)
        if oid not in optimizers:
            optimizers.append(oid)
        if directions.setdefault(tid, direction) != direction:
            raise CliError(EXIT_GRID, f"{path}: conflicting directions for task {tid!r}")
        points.setdefault((tid, oid), []).append((budget, mean))

    grids = {key: tuple(b for b, _ in value) for key, value in points.items()}
    grid = None
    for tid in tasks:
        for oid in optimizers:
            if (tid, oid) not in grids:
                raise CliError(EXIT_GRID, f"missing curve for optimizer {oid!r} on task {tid!r}")
            if grid is None:
                grid = grids[(tid, oid)]
            elif grids[(tid, oid)] != grid:
                raise CliError(EXIT_GRID, "curves do not share one budget grid")
    horizon = len(grid)
    if grid != tuple(range(1, horizon + 1)):
        raise CliError(
            EXIT_GRID,
            "trace metrics need contiguous budgets 1..T; rerun analyze with --budget 1..T",
        )
    means = {
        tid: {oid: np.array([m for _, m in points[(tid, oid)]]) for oid in optimizers}
        for tid in tasks
    }
    return tasks, optimizers, directions, means, horizon


def _positive_scores(matrix: np.ndarray, direction: str) -> tuple[np.ndarray, float]:
    """Shift a task's mean-curve matrix so every entry is a positive score."""
    if direction == Direction.MAXIMIZE.value:
        if np.any(matrix <= 0):
            raise CliError(
                EXIT_GRID,
                "relative scores need positive objectives; shift the objective first",
            )
        return matrix, 0.0
    worst = float(matrix.max())
    span = worst - float(matrix.min())
    if span == 0.0:
        return np.ones_like(matrix), 0.0
    delta = 1e-9 * span
    return worst - matrix + delta, delta


def cmd_summarize(args) -> int:
    tasks, optimizers, directions, means, horizon = _read_curves(Path(args.curves))
    out = _out_dir(args)

    scores: dict[str, np.ndarray] = {}
    shifts: dict[str, float] = {}
    for tid in tasks:
        matrix = np.vstack([means[tid][oid] for oid in optimizers])
        scores[tid], shifts[tid] = _positive_scores(matrix, directions[tid])

    relative_rows = []
    for tid in tasks:
        ratio = scores[tid] / scores[tid].max(axis=0)
        for i, oid in enumerate(optimizers):
            for k in range(horizon):
                relative_rows.append((tid, oid, k + 1, ratio[i, k], shifts[tid]))
    for k in range(horizon):
        perf = np.column_stack([scores[tid][:, k] for tid in tasks])
        summary = aggregate.relative_summary(perf)
        for i, oid in enumerate(optimizers):
            relative_rows.append(("ALL", oid, k + 1, summary[i], 0.0))
    relative_path = out / "relative.csv"
    _write_csv(relative_path, _RELATIVE_HEADER, relative_rows)

    schemes: list[tuple[str, object]] = [
        ("one_hot_1", aggregate.weights_one_hot(horizon, 1)),
        ("one_hot_final", aggregate.weights_one_hot(horizon, horizon)),
    ]
    if horizon >= 2:
        schemes.append(("cpe", aggregate.weights_cpe(horizon)))
    schemes.append(("cpl", aggregate.weights_cpl(horizon)))
    schemes.append(("cpu", aggregate.weights_cpu(horizon)))
    tunability_rows = []
    for tid in tasks:
        for oid in optimizers:
            trace = means[tid][oid]
            for name, scheme in schemes:
                tunability_rows.append((tid, oid, name, aggregate.omega_tunability(trace, scheme)))
    tunability_path = out / "tunability.csv"
    _write_csv(tunability_path, _TUNABILITY_HEADER, tunability_rows)

    alpha_rows = []
    for tid in tasks:
        direction = Direction(directions[tid])
        for oid in optimizers:
            trace = means[tid][oid]
            try:
                _, shift = aggregate.shifted_scores(trace, direction)
                for alpha in (0.90, 0.95, 0.99):
                    zeta = aggregate.alpha_tunability(trace, alpha, direction)
                    alpha_rows.append((tid, oid, f"zeta_{alpha:.2f}", zeta, shift))
                delta = aggregate.sharpness(trace, direction)
                alpha_rows.append((tid, oid, "sharpness", delta, shift))
            except ValueError as err:
                raise CliError(EXIT_GRID, f"{tid}/{oid}: {err}")
    alpha_path = out / "alpha.csv"
    _write_csv(alpha_path, _ALPHA_HEADER, alpha_rows)

    print(relative_path)
    print(tunability_path)
    print(alpha_path)
    return EXIT_OK


# --- prob-best ---------------------------------------------------------------

_PROB_HEADER = ("task", "budget", "optimizer", "probability", "with_replacement")


def _group_by_task(
    libraries: dict[tuple[str, str], TrialLibrary],
) -> tuple[list[str], list[str], dict[str, dict[str, TrialLibrary]]]:
    tasks: list[str] = []
    optimizers: list[str] = []
    by_task: dict[str, dict[str, TrialLibrary]] = {}
    for (oid, tid), lib in libraries.items():
        if tid not in tasks:
            tasks.append(tid)
        if oid not in optimizers:
            optimizers.append(oid)
        by_task.setdefault(tid, {})[oid] = lib
    for tid in tasks:
        missing = [oid for oid in optimizers if oid not in by_task[tid]]
        if missing:
            raise CliError(
                EXIT_GRID, f"task {tid!r} has no library for optimizer {missing[0]!r}"
            )
    return tasks, optimizers, by_task


def cmd_prob_best(args) -> int:
    libraries = _load_libraries(args.files)
    tasks, optimizers, by_task = _group_by_task(libraries)
    if len(optimizers) < 2:
        raise CliError(EXIT_GRID, "prob-best needs libraries for at least two optimizers")
    if args.repetitions < 1:
        raise CliError(EXIT_CONFIG, "--repetitions must be positive")
    if args.budget is None:
        smallest = min(len(lib) for lib in libraries.values())
        budgets = []
        b = 1
        while b <= smallest:
            budgets.append(b)
            b *= 2
    else:
        budgets = parse_budgets(args.budget)

    rows = []
    all_probs: dict[tuple[int, str], list[float]] = {}
    for tid in tasks:
        libs = [by_task[tid][oid] for oid in optimizers]
        for budget in budgets:
            try:
                probs = aggregate.probability_of_best(libs, budget, args.repetitions, args.seed)
            except ValueError as err:
                raise CliError(EXIT_GRID, f"task {tid!r}: {err}")
            for oid, lib, prob in zip(optimizers, libs, probs):
                rows.append(
                    (tid, budget, oid, prob, aggregate.sampling_replacement(budget, len(lib)))
                )
                all_probs.setdefault((budget, oid), []).append(float(prob))
    if len(tasks) > 1:
        for budget in budgets:
            for oid in optimizers:
                values = all_probs[(budget, oid)]
                rows.append(("ALL", budget, oid, sum(values) / len(values), ""))

    out = _out_dir(args)
    path = out / "prob_best.csv"
    _write_csv(path, _PROB_HEADER, rows)
    print(path)
    return EXIT_OK


# --- time-curve --------------------------------------------------------------

_TIME_HEADER = ("task", "interval", "steps", "optimizer", "mean", "q25", "q75")


def cmd_time_curve(args) -> int:
    libraries = _load_libraries(args.files)
    tasks, optimizers, by_task = _group_by_task(libraries)
    if args.intervals < 1 or args.repetitions < 1:
        raise CliError(EXIT_CONFIG, "--intervals and --repetitions must be positive")
    rows = []
    for tid in tasks:
        libs = [by_task[tid][oid] for oid in optimizers]
        try:
            result = time_budget_curve(
                libs, intervals=args.intervals, repetitions=args.repetitions, rng_seed=args.seed
            )
        except ValueError as err:
            raise CliError(EXIT_GRID, f"task {tid!r}: {err}")
        for oid in optimizers:
            curve = result.curves[oid]
            for k in range(args.intervals):
                rows.append(
                    (
                        tid,
                        k + 1,
                        result.boundaries[k],
                        oid,
                        curve.mean[k],
                        curve.quantiles["q25"][k],
                        curve.quantiles["q75"][k],
                    )
                )
    out = _out_dir(args)
    path = out / "time_curve.csv"
    _write_csv(path, _TIME_HEADER, rows)
    print(path)
    return EXIT_OK


# --- plot --------------------------------------------------------------------

_PALETTE = (
    "#4269d0",
    "#efb118",
    "#ff725c",
    "#6cc5b0",
    "#3ca951",
    "#ff8ab7",
    "#a463f2",
    "#97bbf5",
    "#9c6b4e",
    "#9498a0",
)

_SVG_W, _SVG_H = 720, 440
_PLOT = (64.0, 30.0, 696.0, 392.0)  # left, top, right, bottom


def _ticks(lo: float, hi: float) -> list[float]:
    return [lo + i * (hi - lo) / 4.0 for i in range(5)]


def _svg_chart(
    title: str,
    xlabel: str,
    ylabel: str,
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    stacked: bool = False,
) -> str:
    left, top, right, bottom = _PLOT
    xs_all = [x for _, xs, _ in series for x in xs]
    xlo, xhi = min(xs_all), max(xs_all)
    if xlo == xhi:
        pad = max(abs(xlo) * 0.05, 0.5)
        xlo, xhi = xlo - pad, xhi + pad
    if stacked:
        ylo, yhi = 0.0, 1.0
    else:
        ys_all = [y for _, _, ys in series for y in ys]
        ylo, yhi = min(ys_all), max(ys_all)
        if ylo == yhi:
            pad = max(abs(ylo) * 0.05, 0.5)
            ylo, yhi = ylo - pad, yhi + pad
        else:
            pad = 0.05 * (yhi - ylo)
            ylo, yhi = ylo - pad, yhi + pad

    def px(x: float) -> float:
        return left + (x - xlo) / (xhi - xlo) * (right - left)

    def py(y: float) -> float:
        return bottom - (y - ylo) / (yhi - ylo) * (bottom - top)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_SVG_W} {_SVG_H}" '
        'font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{_SVG_W}" height="{_SVG_H}" fill="#ffffff"/>',
        f'<text x="{(left + right) / 2:.2f}" y="18" text-anchor="middle" '
        f'font-size="14">{title}</text>',
    ]
    for tx in _ticks(xlo, xhi):
        parts.append(
            f'<line x1="{px(tx):.2f}" y1="{bottom:.2f}" x2="{px(tx):.2f}" '
            f'y2="{bottom + 5:.2f}" stroke="#333333"/>'
        )
        parts.append(
            f'<text x="{px(tx):.2f}" y="{bottom + 18:.2f}" text-anchor="middle">'
            f"{tx:.4g}</text>"
        )
    for ty in _ticks(ylo, yhi):
        parts.append(
            f'<line x1="{left - 5:.2f}" y1="{py(ty):.2f}" x2="{left:.2f}" '
            f'y2="{py(ty):.2f}" stroke="#333333"/>'
        )
        parts.append(
            f'<text x="{left - 8:.2f}" y="{py(ty) + 4:.2f}" text-anchor="end">'
            f"{ty:.4g}</text>"
        )
        parts.append(
            f'<line x1="{left:.2f}" y1="{py(ty):.2f}" x2="{right:.2f}" '
            f'y2="{py(ty):.2f}" stroke="#eeeeee"/>'
        )

    if stacked:
        base = [0.0] * len(series[0][1])
        xs = list(series[0][1])
        for i, (_, _, ys) in enumerate(series):
            tops = [b + y for b, y in zip(base, ys)]
            forward = " ".join(f"{px(x):.2f},{py(t):.2f}" for x, t in zip(xs, tops))
            backward = " ".join(
                f"{px(x):.2f},{py(b):.2f}" for x, b in zip(reversed(xs), reversed(base))
            )
            color = _PALETTE[i % len(_PALETTE)]
            parts.append(
                f'<polygon points="{forward} {backward}" fill="{color}" '
                'fill-opacity="0.85" stroke="none"/>'
            )
            base = tops
    else:
        for i, (_, xs, ys) in enumerate(series):
            color = _PALETTE[i % len(_PALETTE)]
            points = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
            parts.append(
                f'<polyline points="{points}" fill="none" stroke="{color}" '
                'stroke-width="1.5"/>'
            )
            for x, y in zip(xs, ys):
                parts.append(
                    f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2" fill="{color}"/>'
                )

    parts.append(
        f'<line x1="{left:.2f}" y1="{top:.2f}" x2="{left:.2f}" y2="{bottom:.2f}" '
        'stroke="#333333"/>'
    )
    parts.append(
        f'<line x1="{left:.2f}" y1="{bottom:.2f}" x2="{right:.2f}" y2="{bottom:.2f}" '
        'stroke="#333333"/>'
    )
    parts.append(
        f'<text x="{(left + right) / 2:.2f}" y="{_SVG_H - 8}" text-anchor="middle">'
        f"{xlabel}</text>"
    )
    parts.append(
        f'<text x="14" y="{(top + bottom) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {(top + bottom) / 2:.2f})">{ylabel}</text>'
    )
    for i, (name, _, _) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        ly = top + 8 + 16 * i
        parts.append(
            f'<rect x="{right - 150:.2f}" y="{ly - 9:.2f}" width="10" height="10" '
            f'fill="{color}"/>'
        )
        parts.append(f'<text x="{right - 136:.2f}" y="{ly:.2f}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _plot_grouped(
    rows: list[list[str]],
    task_col: int,
    x_col: int,
    series_col: int,
    y_col: int,
) -> dict[str, list[tuple[str, list[float], list[float]]]]:
    """Arrange CSV rows into per-task series keyed by the series column."""
    charts: dict[str, dict[str, tuple[list[float], list[float]]]] = {}
    for row in rows:
        tid, name = row[task_col], row[series_col]
        try:
            x = float(row[x_col])
            y = float(row[y_col])
        except ValueError:
            raise CliError(EXIT_PARSE, f"non-numeric value in row {row}")
        xs, ys = charts.setdefault(tid, {}).setdefault(name, ([], []))
        xs.append(x)
        ys.append(y)
    return {
        tid: [(name, xs, ys) for name, (xs, ys) in groups.items()]
        for tid, groups in charts.items()
    }


def cmd_plot(args) -> int:
    out = _out_dir(args)
    written = []
    for raw in args.files:
        path = Path(raw)
        header, rows = _read_csv(path)
        stem = path.stem
        if header == _CURVE_HEADER:
            charts = _plot_grouped(rows, task_col=1, x_col=3, series_col=0, y_col=4)
            for tid, series in charts.items():
                svg = _svg_chart(
                    f"expected best vs budget ({tid})", "budget", "objective", series
                )
                target = out / f"{stem}_{tid}.svg"
                target.write_text(svg, encoding="utf-8")
                written.append(target)
        elif header == _PROB_HEADER:
            charts = _plot_grouped(rows, task_col=0, x_col=1, series_col=2, y_col=3)
            for tid, series in charts.items():
                svg = _svg_chart(
                    f"probability of best ({tid})",
                    "budget",
                    "probability",
                    series,
                    stacked=True,
                )
                target = out / f"{stem}_{tid}.svg"
                target.write_text(svg, encoding="utf-8")
                written.append(target)
        elif header == _TIME_HEADER:
            charts = _plot_grouped(rows, task_col=0, x_col=2, series_col=3, y_col=4)
            for tid, series in charts.items():
                svg = _svg_chart(
                    f"incumbent vs update steps ({tid})", "update steps", "objective", series
                )
                target = out / f"{stem}_{tid}.svg"
                target.write_text(svg, encoding="utf-8")
                written.append(target)
        elif header == _RELATIVE_HEADER:
            charts = _plot_grouped(rows, task_col=0, x_col=2, series_col=1, y_col=3)
            for tid, series in charts.items():
                svg = _svg_chart(
                    f"relative score vs budget ({tid})", "budget", "relative score", series
                )
                target = out / f"{stem}_{tid}.svg"
                target.write_text(svg, encoding="utf-8")
                written.append(target)
        else:
            raise CliError(EXIT_PARSE, f"{path}: unrecognized CSV header")
    for target in written:
        print(target)
    return EXIT_OK


# --- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tunebench",
        description="Random-search benchmarking of optimizer tunability.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser(
        "generate",
        help="run random search over a config's optimizer/task grid",
        description=(
            "Reads a key=value config with a [search] section (optimizers, tasks, "
            "trials, seed) and optional [task.<id>] override sections, then writes "
            "one <optimizer>__<task>.jsonl trial file per pair."
        ),
    )
    g.add_argument("config", help="path to the search config file")
    g.add_argument("--out", default=".", help="output directory (default: .)")
    g.add_argument(
        "--priors",
        default=None,
        help="directory of prior_<optimizer>.json files to sample from "
        "(default: stock priors)",
    )
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser(
        "calibrate",
        help="refit priors from near-best trials",
        description=(
            "Pools each optimizer's retained trials across tasks and refits its "
            "prior; writes prior_<optimizer>.json per optimizer."
        ),
    )
    c.add_argument("files", nargs="+", help="trial JSONL files")
    c.add_argument("--retention", type=float, default=0.2, help="relative retention window (default: 0.2)")
    c.add_argument("--out", default=".", help="output directory (default: .)")
    c.set_defaults(func=cmd_calibrate)

    a = sub.add_parser(
        "analyze",
        help="expected-best-at-budget curves from trial libraries",
        description=(
            "Writes curves.csv with columns optimizer,task,direction,budget,mean,"
            "variance,q25,q50,q75. Budgets beyond a library's size are clamped "
            "with a warning."
        ),
    )
    a.add_argument("files", nargs="+", help="trial JSONL files")
    a.add_argument(
        "--budget",
        default=None,
        help="budgets, e.g. '1,4,16' or '1..100' (default: 1..smallest library)",
    )
    mode = a.add_mutually_exclusive_group()
    mode.add_argument(
        "--exact", action="store_true", help="closed-form estimator (default)"
    )
    mode.add_argument(
        "--bootstrap",
        type=int,
        default=None,
        metavar="R",
        help="Monte-Carlo estimator with R simulated searches",
    )
    a.add_argument("--seed", type=int, default=0, help="bootstrap stream seed (default: 0)")
    a.add_argument("--out", default=".", help="output directory (default: .)")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser(
        "summarize",
        help="tunability tables from an analyze CSV",
        description=(
            "Reads curves.csv (contiguous budgets 1..T required) and writes "
            "relative.csv (task,optimizer,budget,score,score_shift; task=ALL rows "
            "average across tasks), tunability.csv (task,optimizer,scheme,value) "
            "and alpha.csv (task,optimizer,metric,value,score_shift)."
        ),
    )
    s.add_argument("curves", help="curves.csv from the analyze command")
    s.add_argument("--out", default=".", help="output directory (default: .)")
    s.set_defaults(func=cmd_summarize)

    pb = sub.add_parser(
        "prob-best",
        help="Monte-Carlo probability each optimizer wins at a budget",
        description=(
            "Writes prob_best.csv with columns task,budget,optimizer,probability,"
            "with_replacement; a task=ALL block averages across tasks."
        ),
    )
    pb.add_argument("files", nargs="+", help="trial JSONL files (>= 2 optimizers)")
    pb.add_argument(
        "--budget",
        default=None,
        help="budgets, e.g. '1,4,16' (default: powers of two up to the smallest library)",
    )
    pb.add_argument("--repetitions", type=int, default=1000, help="Monte-Carlo repetitions (default: 1000)")
    pb.add_argument("--seed", type=int, default=0, help="stream seed (default: 0)")
    pb.add_argument("--out", default=".", help="output directory (default: .)")
    pb.set_defaults(func=cmd_prob_best)

    tc = sub.add_parser(
        "time-curve",
        help="incumbent-vs-update-steps curves on a shared step budget",
        description=(
            "Writes time_curve.csv with columns task,interval,steps,optimizer,"
            "mean,q25,q75 over equal step intervals; requires update_steps on "
            "every record."
        ),
    )
    tc.add_argument("files", nargs="+", help="trial JSONL files")
    tc.add_argument("--intervals", type=int, default=100, help="interval count (default: 100)")
    tc.add_argument("--repetitions", type=int, default=1000, help="simulated searches per optimizer (default: 1000)")
    tc.add_argument("--seed", type=int, default=0, help="stream seed (default: 0)")
    tc.add_argument("--out", default=".", help="output directory (default: .)")
    tc.set_defaults(func=cmd_time_curve)

    pl = sub.add_parser(
        "plot",
        help="render command CSVs as self-contained SVG charts",
        description=(
            "Accepts any CSV written by analyze, summarize, prob-best or "
            "time-curve and writes one <stem>_<task>.svg per task."
        ),
    )
    pl.add_argument("files", nargs="+", help="CSV files from the other commands")
    pl.add_argument("--out", default=".", help="output directory (default: .)")
    pl.set_defaults(func=cmd_plot)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        return args.func(args)
    except CliError as err:
        print(f"tunebench: error: {err}", file=sys.stderr)
        return err.code


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
