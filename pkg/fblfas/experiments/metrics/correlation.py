from functools import lru_cache

from fblfas.codeword import average_correlation, max_correlation
from fblfas.experiments.base import CellContext, CellValue, SeriesMetric
from fblfas.montecarlo import McReport, mc_codeword_correlation


@lru_cache(maxsize=64)
def _mc_correlation(M: int, U: int, n_trials: int, seed: int) -> tuple[McReport, McReport]:
    # U = 1 has no pair, the mean correlation does not depend on U
    return mc_codeword_correlation(M, max(U, 2), n_trials, seed)


class RhoBar(SeriesMetric):
    register = True
    kind = "rho_bar"

    def evaluate(self, ctx: CellContext) -> CellValue:
        return CellValue(value=average_correlation(ctx.config.blocklength))


class RhoMax(SeriesMetric):
    register = True
    kind = "rho_max"

    def evaluate(self, ctx: CellContext) -> CellValue:
        return CellValue(value=max_correlation(ctx.config.blocklength, ctx.config.n_users))


class McRhoBar(SeriesMetric):
    register = True
    monte_carlo = True
    kind = "mc_rho_bar"

    def evaluate(self, ctx: CellContext) -> CellValue:
        mc = ctx.require_mc()
        report, _ = _mc_correlation(
            ctx.config.blocklength, ctx.config.n_users, mc.n_trials, mc.seed
        )
        return CellValue(value=report.estimate, stderr=report.stderr)


class McRhoMax(SeriesMetric):
    register = True
    monte_carlo = True
    kind = "mc_rho_max"

    def evaluate(self, ctx: CellContext) -> CellValue:
        mc = ctx.require_mc()
        if ctx.config.n_users < 2:
            raise ValueError("rho_max needs at least 2 users")
        _, report = _mc_correlation(
            ctx.config.blocklength, ctx.config.n_users, mc.n_trials, mc.seed
        )
        return CellValue(value=report.estimate, stderr=report.stderr)
