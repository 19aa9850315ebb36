"""
Evaluates every (axis value, series) cell of a sweep.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor

from tqdm import tqdm

from fblfas.quadrature import DEFAULT_QUADRATURE, QuadratureSpec

from . import check_series_kinds, registry
from .base import CellContext, SeriesSpec, SweepResult, SweepRow, SweepSpec

logger = logging.getLogger(__name__)


def _evaluate_cell(
    spec: SweepSpec, series: SeriesSpec, axis_value: float, quad: QuadratureSpec
) -> SweepRow:
    try:
        ctx = CellContext(
            config=spec.config_for(series, axis_value),
            axis_name=spec.axis.name,
            axis_value=axis_value,
            params=series.params,
            mc=spec.mc,
            quad=quad,
        )
        cell = registry[series.kind]().evaluate(ctx)
    except Exception as e:
        logger.warning(
            f"{series.name} at {spec.axis.name}={axis_value}: {type(e).__name__}: {e}"
        )
        return SweepRow(
            axis=spec.axis.name, axis_value=axis_value, series=series.name, error=str(e)
        )
    return SweepRow(
        axis=spec.axis.name,
        axis_value=axis_value,
        series=series.name,
        value=cell.value,
        raw_value=cell.raw_value,
        stderr=cell.stderr,
    )


def run_sweep(
    spec: SweepSpec,
    n_workers: int = 1,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
    progress: bool = False,
) -> SweepResult:
    """
    Rows come axis-major, series-minor whatever n_workers. A failing cell
    yields a row carrying its error and the sweep goes on.
    """
    check_series_kinds(spec)
    if n_workers < 1:
        raise ValueError(f"n_workers must be >= 1, got {n_workers}")
    cells = [(series, value) for value in spec.axis.values for series in spec.series]
    logger.info(f"{spec.figure_id}: {len(cells)} cells over axis {spec.axis.name}")

    start = time.perf_counter()

    def run(cell: tuple[SeriesSpec, float]) -> SweepRow:
        return _evaluate_cell(spec, cell[0], float(cell[1]), quad)

    if n_workers == 1:
        rows = [run(cell) for cell in tqdm(cells, desc=spec.figure_id, disable=not progress)]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            rows = list(
                tqdm(
                    pool.map(run, cells),
                    total=len(cells),
                    desc=spec.figure_id,
                    disable=not progress,
                )
            )
    runtime_ms = (time.perf_counter() - start) * 1000.0
    logger.info(f"{spec.figure_id}: done in {runtime_ms:.0f} ms")
    return SweepResult(spec=spec, rows=rows, runtime_ms=runtime_ms)
