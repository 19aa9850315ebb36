"""
BLER bounds. The conditional series is evaluated at the mean best-port
amplitude unless a g_amp parameter pins it.
"""

from fblfas.bler import (
    bler_l_antenna,
    conditional_bler_fas,
    random_coding_point,
    statistical_bler_fas,
)
from fblfas.distribution import amplitude_moments
from fblfas.experiments.base import CellContext, CellValue, SeriesMetric


class BlerConditionalFas(SeriesMetric):
    register = True
    kind = "bler_conditional_fas"

    def evaluate(self, ctx: CellContext) -> CellValue:
        if "g_amp" in ctx.params:
            g_amp = float(ctx.params["g_amp"])
        else:
            method = ctx.params.get("method", "mvti")
            g_amp, _ = amplitude_moments(ctx.config, ctx.profile, method, ctx.quad)
        point = conditional_bler_fas(g_amp, ctx.config)
        return CellValue(value=point.value, raw_value=point.raw_value)


class BlerStatisticalFas(SeriesMetric):
    register = True
    kind = "bler_statistical_fas"

    def evaluate(self, ctx: CellContext) -> CellValue:
        density = ctx.params.get("density", "mvti")
        point = statistical_bler_fas(ctx.config, ctx.profile, ctx.quad, density=density)
        return CellValue(value=point.value, raw_value=point.raw_value)


class BlerLAntenna(SeriesMetric):
    register = True
    kind = "bler_l_antenna"

    def evaluate(self, ctx: CellContext) -> CellValue:
        point = bler_l_antenna(int(ctx.param("L")), ctx.config)
        return CellValue(value=point.value, raw_value=point.raw_value)


class BlerRandomCoding(SeriesMetric):
    register = True
    kind = "bler_random_coding"

    def evaluate(self, ctx: CellContext) -> CellValue:
        point = random_coding_point(ctx.config)
        return CellValue(value=point.value, raw_value=point.raw_value)
