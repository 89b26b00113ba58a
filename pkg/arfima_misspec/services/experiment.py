"""Monte Carlo orchestration: paired replications, summary tables, artifacts."""
import hashlib
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from arfima_misspec.config import settings
from arfima_misspec.exceptions import ArfimaError, CaseMismatch, DegenerateSample, ExperimentFailure, UnsupportedN
from arfima_misspec.models.arfima import EstimatorKind, FamilySpec, SimulationPlan
from arfima_misspec.models.results import (
    ExperimentConfig,
    MonteCarloCell,
    MonteCarloReport,
    PseudoTrueSolution,
    TrueParameterCell,
)
from arfima_misspec.services.asymptotics import build_limit_law, kernel_density, limit_law_draws, mu_n
from arfima_misspec.services.estimators import estimate
from arfima_misspec.services.pseudo_true import solve_pseudo_true
from arfima_misspec.services.simulate import simulate_gaussian
from arfima_misspec.services.storage_service import save_csv, save_json

logger = logging.getLogger(__name__)

_DENSITY_POINTS = 201


def _digest(y: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(y).tobytes()).hexdigest()


def _replicate(task: Tuple[SimulationPlan, FamilySpec, Tuple[EstimatorKind, ...], int]) -> Dict[str, Optional[float]]:
    """d-hat of every method on draw r; None where the estimator failed."""
    plan, family, methods, r = task
    y = simulate_gaussian(plan, r)
    digest = _digest(y)
    out = {}
    for kind in methods:
        try:
            out[kind.value] = estimate(kind, family, y).eta_hat.d
        except ArfimaError as e:
            logger.warning(f"{kind.value} failed on replication {r} (n={plan.n}): {str(e)}")
            out[kind.value] = None
        if _digest(y) != digest:
            raise ExperimentFailure(f"Series {r} changed while running {kind.value}")
    return out


def _run_replications(plan: SimulationPlan, family: FamilySpec, methods: Sequence[EstimatorKind]) -> List[Dict]:
    tasks = [(plan, family, tuple(methods), r) for r in range(plan.replications)]
    if settings.THREADS > 1:
        with ProcessPoolExecutor(max_workers=settings.THREADS) as pool:
            return list(pool.map(_replicate, tasks, chunksize=max(1, len(tasks) // (4 * settings.THREADS))))
    return [_replicate(task) for task in tasks]


def summarize(samples: Sequence[float], target: float) -> Tuple[float, float, float]:
    """(bias, variance, mse) with compensated summation; variance divides by R."""
    count = len(samples)
    bias = math.fsum(x - target for x in samples) / count
    mean = target + bias
    variance = math.fsum((x - mean) ** 2 for x in samples) / count
    return bias, variance, bias * bias + variance


def _fml_variance(
    d_hat: Sequence[float], solution: PseudoTrueSolution, pair, n: int
) -> Optional[float]:
    """S_n: variance of the Case 1 standardized FML estimates."""
    try:
        correction = mu_n(EstimatorKind.FML, pair, solution.eta1, n)[0]
    except UnsupportedN as e:
        logger.warning(f"Skipping truncation selection at n={n}: {str(e)}")
        return None
    rate = n ** (1.0 - 2.0 * solution.d_star) / math.log(n)
    standardized = [rate * (x - solution.eta1.d - correction) for x in d_hat]
    _, variance, _ = summarize(standardized, 0.0)
    return variance


def run_monte_carlo(cfg: ExperimentConfig) -> MonteCarloReport:
    """
    Run the paired Monte Carlo design.

    Every method sees the same R series per sample size. Failed fits are
    excluded and counted; a failure share at or above
    settings.FAILURE_THRESHOLD aborts the run.

    Args:
        cfg: Experiment configuration

    Returns:
        MonteCarloReport with one cell per (method, n)
    """
    pair = cfg.pair
    solution = solve_pseudo_true(pair)
    d1 = solution.eta1.d
    cells = []
    truncation_s = {}

    for n in cfg.n_list:
        plan = SimulationPlan(spec=pair.tdgp, n=n, seed=cfg.seed, replications=cfg.replications)
        rows = _run_replications(plan, pair.family, cfg.methods)
        samples = {}
        for kind in cfg.methods:
            values = [row[kind.value] for row in rows if row[kind.value] is not None]
            failures = cfg.replications - len(values)
            if failures / cfg.replications >= settings.FAILURE_THRESHOLD:
                raise ExperimentFailure(
                    f"{kind.value} failed on {failures} of {cfg.replications} replications at n={n}"
                )
            if failures:
                logger.warning(f"Excluded {failures} failed {kind.value} replications at n={n}")
            samples[kind] = values

        S_n = None
        if solution.d_star > 0.25 + settings.CASE2_BAND and EstimatorKind.FML in samples:
            S_n = _fml_variance(samples[EstimatorKind.FML], solution, pair, n)

        for kind in cfg.methods:
            bias, variance, mse = summarize(samples[kind], d1)
            law = None
            try:
                law = build_limit_law(pair, solution.eta1, n, kind, S_n=S_n, w_const_variant=cfg.w_const_variant)
            except UnsupportedN as e:
                logger.warning(f"No limit law for {kind.value} at n={n}: {str(e)}")
            if law is not None and law.case == 1 and S_n is not None:
                truncation_s[n] = law.s
            cells.append(
                MonteCarloCell(
                    method=kind,
                    n=n,
                    bias=bias,
                    variance=variance,
                    mse=mse,
                    failures=cfg.replications - len(samples[kind]),
                    d_hat_samples=samples[kind],
                    limit_law=law,
                )
            )
        logger.info(f"Finished n={n} with {cfg.replications} replications")

    report = MonteCarloReport(config=cfg, pseudo_true=solution, cells=cells, truncation_s=truncation_s)
    for cell in report.cells:
        if EstimatorKind.FML in cfg.methods:
            cell.rel_eff_vs_fml = relative_efficiency(report, cell.method, EstimatorKind.FML, cell.n)
        if cfg.report_standardized and cell.limit_law is not None:
            cell.standardized_samples = standardized_samples(report, cell.limit_law, cell.n).tolist()
    return report


def relative_efficiency(report: MonteCarloReport, method: EstimatorKind, baseline: EstimatorKind, n: int) -> float:
    """MSE(method) / MSE(baseline) at sample size n."""
    reference = report.cell(baseline, n).mse
    if reference == 0:
        return 1.0 if report.cell(method, n).mse == 0 else math.inf
    return report.cell(method, n).mse / reference


def standardized_samples(report: MonteCarloReport, law, n: int) -> np.ndarray:
    """
    Case-appropriate standardization of the law's method estimates.

    Args:
        report: Monte Carlo report holding the d-hat samples
        law: Limit law built for (pair, n, method)
        n: Sample size of the cell

    Returns:
        rate * (d_hat - d1 - mu_n) in Case 1, rate * (d_hat - d1) otherwise
    """
    if law.n != n:
        raise CaseMismatch(f"Law built for n={law.n}, requested n={n}")
    if abs(law.dstar - report.pseudo_true.d_star) > 1e-8:
        raise CaseMismatch(f"Law d*={law.dstar} differs from report d*={report.pseudo_true.d_star}")
    try:
        cell = report.cell(law.kind, n)
    except KeyError as e:
        raise CaseMismatch(str(e)) from e
    centered = np.asarray(cell.d_hat_samples) - report.pseudo_true.eta1.d
    if law.case == 1:
        centered = centered - law.mu_n[0]
    return law.rate(n) * centered


def bias_mse_to_true(report: MonteCarloReport) -> List[TrueParameterCell]:
    """Bias and MSE relative to d0: Bias - d*, MSE + d*^2 - 2 d* Bias."""
    dstar = report.pseudo_true.d_star
    return [
        TrueParameterCell(
            method=cell.method,
            n=cell.n,
            bias=cell.bias - dstar,
            mse=cell.mse + dstar * dstar - 2.0 * dstar * cell.bias,
        )
        for cell in report.cells
    ]


def _theta0(report: MonteCarloReport) -> float:
    theta = report.config.pair.tdgp.theta
    return theta[0] if theta else 0.0


def _table_rows(report: MonteCarloReport, values: Dict[Tuple[EstimatorKind, int], Tuple[float, ...]]) -> List[List]:
    rows = []
    for n in report.config.n_list:
        row = [report.pseudo_true.d_star, _theta0(report), n]
        for kind in report.config.methods:
            row.extend(values[(kind, n)])
        rows.append(row)
    return rows


def _density_table(report: MonteCarloReport, n: int) -> Optional[Tuple[List[str], List[List[float]]]]:
    cells = [report.cell(kind, n) for kind in report.config.methods]
    if any(cell.standardized_samples is None for cell in cells):
        return None
    law = cells[0].limit_law
    limit = limit_law_draws(law, report.config.law_samples, report.config.seed)
    pooled = np.concatenate([limit] + [np.asarray(cell.standardized_samples) for cell in cells])
    spread = np.std(pooled)
    grid = np.linspace(pooled.min() - spread, pooled.max() + spread, _DENSITY_POINTS)
    columns = []
    for cell in cells:
        try:
            columns.append(kernel_density(cell.standardized_samples, grid))
        except DegenerateSample as e:
            logger.warning(f"No density for {cell.method.value} at n={n}: {str(e)}")
            columns.append(np.full(grid.size, np.nan))
    columns.append(kernel_density(limit, grid))
    header = ["x"] + [kind.value.upper() for kind in report.config.methods] + ["Limit"]
    return header, np.column_stack([grid] + columns).tolist()


def emit_report(report: MonteCarloReport, out_dir: Optional[str] = None, fmt: str = "all") -> List[str]:
    """
    Write the report artifacts.

    Args:
        report: Monte Carlo report
        out_dir: Target directory; defaults to the configured outputs
        fmt: ``json``, ``csv`` or ``all``

    Returns:
        Paths written
    """
    out_dir = out_dir or report.config.outputs
    written = []
    if fmt in ("json", "all"):
        written.append(save_json(report, os.path.join(out_dir, "report.json")))
    if fmt not in ("csv", "all"):
        return written

    methods = report.config.methods
    header = ["d_star", "theta0", "n"]
    for kind in methods:
        header += [f"Bias_{kind.value.upper()}", f"MSE_{kind.value.upper()}"]

    d1_values = {(cell.method, cell.n): (cell.bias, cell.mse) for cell in report.cells}
    written.append(save_csv(header, _table_rows(report, d1_values), os.path.join(out_dir, "table_d1.csv")))
    d0_values = {(cell.method, cell.n): (cell.bias, cell.mse) for cell in bias_mse_to_true(report)}
    written.append(save_csv(header, _table_rows(report, d0_values), os.path.join(out_dir, "table_d0.csv")))

    eff_header = ["d_star", "theta0", "n"] + [kind.value.upper() for kind in methods]
    for baseline, name in ((EstimatorKind.FML, "rel_eff_vs_fml.csv"), (EstimatorKind.CSS, "rel_eff_css.csv")):
        if baseline not in methods:
            continue
        if baseline == EstimatorKind.FML:
            values = {(k, n): (relative_efficiency(report, k, baseline, n),) for k in methods for n in report.config.n_list}
        else:
            values = {(k, n): (relative_efficiency(report, baseline, k, n),) for k in methods for n in report.config.n_list}
        written.append(save_csv(eff_header, _table_rows(report, values), os.path.join(out_dir, name)))

    for n in report.config.n_list:
        table = _density_table(report, n)
        if table is not None:
            written.append(save_csv(table[0], table[1], os.path.join(out_dir, f"density_n{n}.csv")))
    logger.info(f"Report written to {out_dir} ({len(written)} files)")
    return written
