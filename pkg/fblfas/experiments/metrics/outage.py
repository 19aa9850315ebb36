from fblfas.experiments.base import CellContext, CellValue, SeriesMetric
from fblfas.montecarlo import mc_sinr_outage
from fblfas.outage import OutageQuery, outage_fas, outage_mrc


class OutageFas(SeriesMetric):
    register = True
    kind = "outage_fas"

    def evaluate(self, ctx: CellContext) -> CellValue:
        query = OutageQuery(
            gamma_th=float(ctx.param("gamma_th")),
            config=ctx.config,
            correlation_mode=ctx.params.get("correlation_mode", "mean"),
        )
        return CellValue(value=outage_fas(query, ctx.profile, ctx.quad))


class OutageMrc(SeriesMetric):
    register = True
    kind = "outage_mrc"

    def evaluate(self, ctx: CellContext) -> CellValue:
        value = outage_mrc(
            float(ctx.param("gamma_th")),
            int(ctx.param("L")),
            ctx.config.n_users,
            ctx.config.channel_var,
            ctx.config.noise_var,
        )
        return CellValue(value=value)


class McOutageFas(SeriesMetric):
    register = True
    monte_carlo = True
    kind = "mc_outage_fas"

    def evaluate(self, ctx: CellContext) -> CellValue:
        mc = ctx.require_mc()
        report = mc_sinr_outage(
            ctx.config, ctx.profile, float(ctx.param("gamma_th")), mc.n_trials, mc.seed
        )
        return CellValue(value=report.estimate, stderr=report.stderr)
