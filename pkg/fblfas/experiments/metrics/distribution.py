"""
Best-port amplitude CDF and PDF at the amplitude r of the cell.
"""

from functools import lru_cache

import numpy as np
import numpy.typing as npt

from fblfas.channel import SystemConfig, draw_best_amplitudes, profile_for
from fblfas.distribution import cdf_on_grid, pdf_on_grid
from fblfas.experiments.base import CellContext, CellValue, SeriesMetric


@lru_cache(maxsize=8)
def _sorted_amplitudes(config: SystemConfig, n_samples: int, seed: int) -> npt.NDArray[np.float64]:
    samples = draw_best_amplitudes(config, profile_for(config), n_samples, seed)
    return np.sort(samples)


class _Analytic(SeriesMetric):
    method = "exact"
    density = False

    def evaluate(self, ctx: CellContext) -> CellValue:
        r = float(ctx.param("r"))
        method = ctx.params.get("method", self.method)
        on_grid = pdf_on_grid if self.density else cdf_on_grid
        value = on_grid(np.array([r]), ctx.config, ctx.profile, method, ctx.quad)
        return CellValue(value=float(value[0]))


class CdfExact(_Analytic):
    register = True
    kind = "cdf_exact"


class CdfMvti(_Analytic):
    register = True
    kind = "cdf_mvti"
    method = "mvti"


class PdfExact(_Analytic):
    register = True
    kind = "pdf_exact"
    density = True


class PdfMvti(_Analytic):
    register = True
    kind = "pdf_mvti"
    method = "mvti"
    density = True


class CdfEmpirical(SeriesMetric):
    register = True
    monte_carlo = True
    kind = "cdf_empirical"

    def evaluate(self, ctx: CellContext) -> CellValue:
        mc = ctx.require_mc()
        r = float(ctx.param("r"))
        ordered = _sorted_amplitudes(ctx.config, mc.n_trials, mc.seed)
        p = np.searchsorted(ordered, r, side="right") / ordered.size
        return CellValue(value=float(p), stderr=float(np.sqrt(p * (1.0 - p) / ordered.size)))
