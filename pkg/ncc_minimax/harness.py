#!/usr/bin/env python3
"""
NCC Minimax - Experiment Handler

Runs solver comparisons from a JSON experiment config, persists one CSV trace and one JSON
manifest per (solver, seed), and summarizes a run directory. Every public method returns a
result dictionary {"success", "message", "data", "error"}.
"""

import csv
import glob
import json
import logging
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .checks import SUITES, run_suite
from .config import Config
from .data import gen_poison_data, write_libsvm
from .errors import ArgumentError, ConfigError
from .models import (CSV_COLUMNS, CSV_SCHEMA_VERSION, ExperimentConfig, ProblemName, RunManifest, SchemeName,
                     SolverConfig)
from .problems import build_problem, poison_accuracy
from .solvers import SolverResult, run_solver
from .streams import rng_stream
from .theory import pvr_step_sizes, theory_constants, zerosarah_step_sizes

logger = logging.getLogger(__name__)

INFINITY = "∞"
DEFAULT_THRESHOLDS = (1e-1, 1e-2, 1e-3)
MANIFEST_SUFFIX = ".manifest.json"
# estimator storage as a function of the component count n
STORAGE_CLASS = {
    SchemeName.PVR: "O(1)",
    SchemeName.ZEROSARAH: "O(n)",
    SchemeName.STOCGDA: "O(1)",
    SchemeName.VR_AGDA: "O(1)",
    SchemeName.GDA: "O(1)",
}


def _error(error_msg: str) -> Dict[str, Any]:
    logger.error(f"❌ {error_msg}")
    return {"success": False, "error": error_msg, "message": f"❌ Error: {error_msg}"}


def load_experiment(source: Union[ExperimentConfig, Dict[str, Any], str]) -> ExperimentConfig:
    """Accept a model, a dict, a JSON string or a path to a JSON file"""
    if isinstance(source, ExperimentConfig):
        return source
    if isinstance(source, dict):
        return ExperimentConfig.model_validate(source)
    if os.path.isfile(source):
        with open(source, 'r') as handle:
            return ExperimentConfig.model_validate_json(handle.read())
    return ExperimentConfig.model_validate_json(source)


# -- trace files -----------------------------------------------------------------------------

def write_trace(path: str, result: SolverResult, with_accuracy: bool, with_wall: bool) -> None:
    columns = CSV_COLUMNS + (['accuracy'] if with_accuracy else [])
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow([f"schema={CSV_SCHEMA_VERSION}"])
        writer.writerow(columns)
        for record in result.trace:
            writer.writerow(record.csv_row(with_accuracy, with_wall))


def read_trace(path: str) -> List[Dict[str, Optional[float]]]:
    with open(path, 'r', newline='') as handle:
        reader = csv.reader(handle)
        schema = next(reader, None)
        if schema != [f"schema={CSV_SCHEMA_VERSION}"]:
            raise ArgumentError(f"{path}: unsupported trace schema {schema}")
        header = next(reader)
        return [{name: (float(cell) if cell != '' else None) for name, cell in zip(header, row)}
                for row in reader]


# -- summaries -------------------------------------------------------------------------------

def _stationarity(row: Dict[str, Optional[float]]) -> float:
    return max(row['res_x'], row['res_y'])


def _at_budget(rows: List[Dict[str, Optional[float]]], budget: float, key: str) -> Optional[float]:
    """Value of key at the last record whose oracle count fits in the budget"""
    value = None
    for row in rows:
        if row['oracle_count'] > budget:
            break
        value = row.get(key)
    return value


def parse_budget(text: Union[str, float, int], n: int) -> float:
    """'50n' is 50 times the component count, plain numbers are oracle counts"""
    if isinstance(text, (int, float)):
        return float(text)
    match = re.fullmatch(r'\s*([0-9.eE+-]+)\s*(n?)\s*', text)
    if not match:
        raise ArgumentError(f"invalid oracle budget {text!r}")
    return float(match.group(1)) * (n if match.group(2) else 1)


def run_metrics(rows: List[Dict[str, Optional[float]]], thresholds: Sequence[float],
                budgets: Sequence[Tuple[str, float]]) -> Dict[str, Optional[float]]:
    if not rows:
        raise ArgumentError("empty trace")
    stationarity = [_stationarity(row) for row in rows]
    metrics: Dict[str, Optional[float]] = {
        "final_res": stationarity[-1],
        "best_res": min(stationarity),
        "final_primal": rows[-1].get('primal'),
        "final_accuracy": rows[-1].get('accuracy'),
        "oracle_count": rows[-1]['oracle_count'],
    }
    for threshold in thresholds:
        reached = next((row['oracle_count'] for row, s in zip(rows, stationarity) if s <= threshold), math.inf)
        metrics[f"oracle@{threshold:g}"] = reached
    for label, budget in budgets:
        metrics[f"primal@{label}"] = _at_budget(rows, budget, 'primal')
        if 'accuracy' in rows[0]:
            metrics[f"accuracy@{label}"] = _at_budget(rows, budget, 'accuracy')
    return metrics


def _mean_std(values: List[Optional[float]]) -> Tuple[Optional[float], Optional[float]]:
    present = [v for v in values if v is not None]
    if not present:
        return None, None
    if any(math.isinf(v) for v in present):
        return math.inf, None
    arr = np.asarray(present, dtype=float)
    return float(arr.mean()), float(arr.std(ddof=1)) if arr.size > 1 else 0.0


def _cell(value: Optional[float]) -> str:
    if value is None:
        return ''
    if isinstance(value, float) and math.isinf(value):
        return INFINITY
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def render_table(columns: List[str], rows: List[List[str]]) -> str:
    widths = [max([len(col)] + [len(row[k]) for row in rows]) for k, col in enumerate(columns)]
    lines = ['  '.join(col.ljust(w) for col, w in zip(columns, widths)),
             '  '.join('-' * w for w in widths)]
    lines += ['  '.join(cell.rjust(w) if k else cell.ljust(w) for k, (cell, w) in enumerate(zip(row, widths)))
              for row in rows]
    return '\n'.join(lines) + '\n'


class ExperimentHandler:
    """
    Main handler for running experiments and summarizing their outputs.
    Provides the interface used by both the CLI and the HTTP service.
    """

    def __init__(self, output_dir: Optional[str] = None, workers: Optional[int] = None):
        """Initialize the handler from the environment configuration"""
        try:
            if not Config.validate():
                raise ConfigError("Invalid configuration. Please check your NCC_* environment variables.")
            self.output_dir = output_dir or Config.OUTPUT_DIR
            self.workers = workers or Config.WORKERS
            logger.info("✅ Experiment Handler initialized successfully")
        except Exception as e:
            logger.error(f"❌ Failed to initialize Experiment Handler: {e}")
            raise

    # -- runs ----------------------------------------------------------------------------

    def _execute(self, problem, extras: Dict[str, Any], spec: Dict[str, Any], solver: SolverConfig, seed: int,
                 master_seed: int, out_dir: str, deterministic: bool) -> Dict[str, Any]:
        run_id = f"{solver.display_label}-s{seed}"
        stream_id = f"{solver.display_label}/seed{seed}"
        config = solver.model_copy(update={"seed": seed})
        trace_file = f"{run_id}.csv"
        started_at = datetime.now(timezone.utc).isoformat()
        try:
            monitor = None
            if 'test' in extras:
                test = extras['test']
                monitor = lambda x, y: poison_accuracy(problem, y, test)

            result = run_solver(problem, config, stream=rng_stream(master_seed, stream_id), monitor=monitor)
            write_trace(os.path.join(out_dir, trace_file), result, monitor is not None, not deterministic)

            step_sizes = result.steps.as_dict()
            if config.smoothed:
                step_sizes["constants"] = theory_constants(problem, config, result.steps).as_dict()
            final_record = result.trace[-1]
            manifest = RunManifest(
                run_id=run_id, stream_id=stream_id, seed=seed, master_seed=master_seed, problem=spec,
                solver=config.model_dump(mode='json'), step_sizes=step_sizes, defaults=result.defaults,
                trace_file=trace_file, oracle_count=result.counter.total,
                diag_oracle_count=result.diag_counter.total,
                best={**result.best.model_dump(mode='json'), "stationarity": result.best.stationarity},
                final={**final_record.model_dump(mode='json'), "stationarity": final_record.stationarity,
                       "heads": result.estimator.heads, "tails": result.estimator.tails,
                       "estimator_floats": result.estimator.stored_floats()},
                started_at=started_at, finished_at=datetime.now(timezone.utc).isoformat(),
                wall_seconds=result.wall_seconds,
            )
            logger.info(f"✅ {run_id}: best stationarity {result.best.stationarity:.4e} "
                        f"after {result.counter.total} oracle calls")
            status = {"run_id": run_id, "success": True, "trace_file": trace_file,
                      "best_stationarity": result.best.stationarity, "oracle_count": result.counter.total}
        except Exception as e:
            logger.error(f"❌ Run {run_id} failed: {e}")
            manifest = RunManifest(run_id=run_id, stream_id=stream_id, seed=seed, master_seed=master_seed,
                                   problem=spec, solver=config.model_dump(mode='json'), trace_file=trace_file,
                                   started_at=started_at, finished_at=datetime.now(timezone.utc).isoformat(),
                                   success=False, error=str(e))
            status = {"run_id": run_id, "success": False, "error": str(e)}

        with open(os.path.join(out_dir, run_id + MANIFEST_SUFFIX), 'w') as handle:
            handle.write(manifest.model_dump_json(indent=2))
        return status

    def run_experiment(self, experiment: Union[ExperimentConfig, Dict[str, Any], str],
                       output_dir: Optional[str] = None, workers: Optional[int] = None,
                       data: Optional[str] = None) -> Dict[str, Any]:
        """
        Run every (solver, seed) pair of an experiment.

        Args:
            experiment: ExperimentConfig, dict, JSON string or path to a JSON file
            output_dir: overrides the config and NCC_OUTPUT_DIR
            workers: concurrent runs, overrides the config and NCC_WORKERS
            data: LIBSVM path, overrides the problem data path of the config

        Returns:
            Result dictionary whose data lists one status per run
        """
        try:
            config = load_experiment(experiment)
            if data is not None:
                config = config.model_copy(update={"problem": config.problem.model_copy(update={"data": data})})
                logger.info(f"📂 Using data file {data}")
            master_seed = Config.master_seed(config.master_seed)
            out_dir = output_dir or config.output_dir or self.output_dir
            workers = workers or config.workers or self.workers

            # problem construction errors surface before anything is written
            problem, extras = build_problem(config.problem.name.value, config.problem.params,
                                            config.problem.data, seed=master_seed)
            lipschitz = problem.lipschitz_L
            spec = {**config.problem.model_dump(mode='json'), "instance": problem.describe(),
                    **{k: v for k, v in extras.items() if k in ('test_frac', 'poison_ratio')}}
            if extras.get('theta_star') is not None:
                spec["theta_star_norm"] = float(np.linalg.norm(extras['theta_star']))

            solvers = [s.model_copy(update={"trace_every": config.trace_every}) if config.trace_every else s
                       for s in config.solvers]
            runs = [(solver, seed) for solver in solvers for seed in config.seeds]
            os.makedirs(out_dir, exist_ok=True)
            logger.info(f"🧪 Running {len(runs)} runs on {problem.name} (n={problem.n}, L={lipschitz:.4g}) "
                        f"with {workers} worker(s) into {out_dir}")

            with ThreadPoolExecutor(max_workers=workers) as pool:
                statuses = list(pool.map(
                    lambda job: self._execute(problem, extras, spec, job[0], job[1], master_seed, out_dir,
                                              config.deterministic_traces),
                    runs))

            failed = [s for s in statuses if not s["success"]]
            message = f"✅ Completed {len(statuses) - len(failed)} of {len(statuses)} runs in {out_dir}"
            if failed:
                message = f"❌ {len(failed)} of {len(statuses)} runs failed: " + \
                          ", ".join(f"{s['run_id']} ({s['error']})" for s in failed)
            logger.info(message)
            response = {
                "success": not failed,
                "message": message,
                "data": {"output_dir": out_dir, "master_seed": master_seed, "runs": statuses}
            }
            if failed:
                response["error"] = message
            return response

        except Exception as e:
            return _error(f"Failed to run experiment: {str(e)}")

    # -- summaries -----------------------------------------------------------------------

    def compare(self, run_dir: str, thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
                budgets: Sequence[Union[str, float]] = ()) -> Dict[str, Any]:
        """
        Summarize a run directory per solver (mean and std over seeds) and write
        summary.csv and summary.txt next to the traces.
        """
        try:
            manifests = []
            for path in sorted(glob.glob(os.path.join(run_dir, '*' + MANIFEST_SUFFIX))):
                with open(path, 'r') as handle:
                    manifest = RunManifest.model_validate_json(handle.read())
                if manifest.success:
                    manifests.append(manifest)
            if not manifests:
                return _error(f"No completed runs in {run_dir}")

            per_solver: Dict[str, List[Dict[str, Any]]] = {}
            storage: Dict[str, str] = {}
            for manifest in manifests:
                n = int(manifest.problem.get("instance", {}).get("n", 1))
                budget_pairs = [(str(b), parse_budget(b, n)) for b in budgets]
                rows = read_trace(os.path.join(run_dir, manifest.trace_file))
                metrics = run_metrics(rows, thresholds, budget_pairs)
                metrics["wall_s"] = manifest.wall_seconds
                metrics["memory_floats"] = (manifest.final or {}).get("estimator_floats")
                label = manifest.solver.get("label") or manifest.solver["scheme"]
                per_solver.setdefault(label, []).append(metrics)
                storage[label] = STORAGE_CLASS[SchemeName(manifest.solver["scheme"])]

            metric_names = list(next(iter(per_solver.values()))[0].keys())
            columns = ["solver", "runs", "storage"]
            for name in metric_names:
                columns += [name, f"{name}_std"]
            table, summary = [], []
            for label in sorted(per_solver):
                runs = per_solver[label]
                entry: Dict[str, Any] = {"solver": label, "runs": len(runs), "storage": storage[label]}
                cells = [label, str(len(runs)), storage[label]]
                for name in metric_names:
                    mean, std = _mean_std([m.get(name) for m in runs])
                    entry[name], entry[f"{name}_std"] = mean, std
                    cells += [_cell(mean), _cell(std)]
                table.append(cells)
                summary.append(entry)

            with open(os.path.join(run_dir, 'summary.csv'), 'w', newline='', encoding='utf-8') as handle:
                writer = csv.writer(handle, lineterminator='\n')
                writer.writerow(columns)
                writer.writerows(table)
            text = render_table(columns, table)
            with open(os.path.join(run_dir, 'summary.txt'), 'w', encoding='utf-8') as handle:
                handle.write(text)

            logger.info(f"✅ Summarized {len(manifests)} runs of {len(per_solver)} solvers in {run_dir}")
            return {
                "success": True,
                "message": text,
                "data": {"rows": [{k: (INFINITY if isinstance(v, float) and math.isinf(v) else v)
                                   for k, v in entry.items()} for entry in summary],
                         "run_dir": run_dir, "runs": len(manifests)}
            }
        except Exception as e:
            return _error(f"Failed to compare runs: {str(e)}")

    # -- tooling -------------------------------------------------------------------------

    def step_size_bounds(self, scheme: SchemeName, L: float, p: float = 0.5, n: Optional[int] = None,
                         a: float = 2.0, r: Optional[float] = None, D_Y: float = math.sqrt(2.0)) -> Dict[str, Any]:
        """Step-size bounds of the PVR or ZeroSARAH analysis"""
        try:
            scheme = SchemeName(scheme)
            if scheme == SchemeName.PVR:
                bounds = pvr_step_sizes(L, p, r, D_Y)
            elif scheme == SchemeName.ZEROSARAH:
                if n is None:
                    raise ArgumentError("zerosarah bounds need the component count n")
                bounds = zerosarah_step_sizes(L, n, a, r, D_Y)
            else:
                raise ArgumentError(f"no step-size bounds for {scheme.value}")
            data = bounds.model_dump(mode='json')
            lines = [f"{key:>16}: {value}" for key, value in data.items() if value is not None]
            return {"success": True, "message": '\n'.join(lines), "data": data}
        except Exception as e:
            return _error(f"Failed to compute step sizes: {str(e)}")

    def generate_data(self, task: str, seed: int, out: str, n: int = 1000, d: int = 100,
                      noise_var: float = 1e-3, theta_star: str = "gaussian") -> Dict[str, Any]:
        """Write a synthetic dataset as LIBSVM text"""
        try:
            if task != ProblemName.POISON.value:
                raise ArgumentError(f"no generator for task {task!r}")
            dataset, theta_star = gen_poison_data(seed, n=n, d=d, noise_var=noise_var, theta_star=theta_star)
            directory = os.path.dirname(out)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(out, 'w') as handle:
                write_libsvm(dataset, handle)
            positives = int(dataset.labels.sum())
            logger.info(f"✅ Wrote {dataset.n} samples ({positives} positive) to {out}")
            return {"success": True, "message": f"✅ Wrote {dataset.n} x {dataset.d} poison dataset to {out}",
                    "data": {"path": out, "n": dataset.n, "d": dataset.d, "positives": positives,
                             "theta_star_norm": float(np.linalg.norm(theta_star))}}
        except Exception as e:
            return _error(f"Failed to generate data: {str(e)}")

    def run_checks(self, suite: str, quick: bool = False, master_seed: int = 0,
                   out: Optional[str] = None, workers: Optional[int] = None) -> Dict[str, Any]:
        """Run one verification suite and optionally write its JSON report"""
        try:
            report = run_suite(suite, quick=quick, master_seed=Config.master_seed(master_seed),
                               workers=workers or self.workers)
            if out:
                with open(out, 'w') as handle:
                    json.dump(report, handle, indent=2)
            failed = [c["name"] for c in report["checks"] if not c["passed"]]
            message = (f"✅ {suite}: all {len(report['checks'])} checks passed" if not failed
                       else f"❌ {suite}: {len(failed)} check(s) failed: {', '.join(failed)}")
            response = {"success": report["passed"], "message": message, "data": report}
            if failed:
                response["error"] = message
            return response
        except Exception as e:
            return _error(f"Failed to run {suite} checks: {str(e)}")

    def get_status(self) -> Dict[str, Any]:
        """
        Get the current status of the handler.

        Returns:
            Dictionary with status information
        """
        try:
            return {
                "handler_status": "ready",
                "output_dir": self.output_dir,
                "workers": self.workers,
                "schemes": [s.value for s in SchemeName],
                "problems": [p.value for p in ProblemName],
                "check_suites": list(SUITES),
                "config_valid": Config.validate()
            }
        except Exception as e:
            return {
                "handler_status": "error",
                "error": str(e)
            }
