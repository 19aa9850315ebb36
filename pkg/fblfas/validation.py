"""
Analytic-versus-reference checks behind the validate command.

Each check is a function (seed) -> CheckResult registered in a suite with
the @check decorator. run_checks runs a suite, or every suite, in
registration order.
"""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats
from tabulate import tabulate

from fblfas.bler import bler_l_antenna, conditional_bler_raw, statistical_bler_fas
from fblfas.channel import (
    PortCorrelationProfile,
    SystemConfig,
    draw_best_amplitudes,
    profile_for,
)
from fblfas.codeword import average_correlation, gumbel_params, gumbel_pdf, max_correlation
from fblfas.distribution import (
    empirical_from_samples,
    evaluate_distribution,
    pdf_on_grid,
    tail_radius,
)
from fblfas.montecarlo import mc_codeword_correlation, mc_ml_bler_small, mc_sinr_outage
from fblfas.outage import OutageQuery, outage_fas, outage_mrc
from fblfas.quadrature import DEFAULT_QUADRATURE, QuadratureSpec, integrate
from fblfas.special import marcum_q1

logger = logging.getLogger(__name__)

SUITES = ("correlation", "distribution", "bler", "outage", "montecarlo")

TIGHT_QUADRATURE = QuadratureSpec(rel_tol=1e-12, abs_tol=1e-15)

# (U, M, N) scenarios small enough for exhaustive ML search
ML_SCENARIOS = ((2, 8, 2), (3, 6, 3), (4, 8, 2))
ML_TRIALS = 20_000


@dataclass(frozen=True)
class CheckResult:
    name: str
    suite: str
    passed: bool
    detail: str


CheckFn = Callable[[int], CheckResult]
checks: dict[str, list[CheckFn]] = {suite: [] for suite in SUITES}


def check(suite: str) -> Callable[[CheckFn], CheckFn]:
    if suite not in SUITES:
        raise ValueError(f"Unknown suite {suite}, expected one of {SUITES}")

    def wrap(fn: CheckFn) -> CheckFn:
        checks[suite].append(fn)
        return fn

    return wrap


def _result(name: str, suite: str, passed: bool, detail: str) -> CheckResult:
    return CheckResult(name=name, suite=suite, passed=bool(passed), detail=detail)


@check("correlation")
def rho_bar_against_monte_carlo(seed: int) -> CheckResult:
    worst = 0.0
    passed = True
    for M in (10, 20, 50, 100):
        report, _ = mc_codeword_correlation(M, 20, 2000, seed)
        gap = abs(average_correlation(M) - report.estimate)
        passed &= gap <= max(0.005, 5 * report.stderr)
        worst = max(worst, gap)
    return _result("rho_bar vs MC", "correlation", passed, f"max gap {worst:.2e}")


@check("correlation")
def rho_max_against_monte_carlo(seed: int) -> CheckResult:
    worst = 0.0
    for M in (50, 100):
        for U in (20, 40, 60, 80):
            _, report = mc_codeword_correlation(M, U, 2000, seed)
            worst = max(worst, abs(max_correlation(M, U) / report.estimate - 1.0))
    return _result("rho_max vs MC", "correlation", worst <= 0.07, f"max rel error {worst:.3f}")


@check("correlation")
def gumbel_moments(seed: int) -> CheckResult:
    params = gumbel_params(50, 1770)
    a, b = params.location, params.scale
    lo, hi = a - 20 * b, a + 60 * b
    mean = integrate(lambda z: z * gumbel_pdf(z, a, b), lo, hi, DEFAULT_QUADRATURE).value
    second = integrate(
        lambda z: (z - mean) ** 2 * gumbel_pdf(z, a, b), lo, hi, DEFAULT_QUADRATURE
    ).value
    gap = max(abs(mean - params.mean), abs(second - np.pi**2 * b**2 / 6))
    return _result("Gumbel moments", "correlation", gap <= 1e-5, f"max gap {gap:.2e}")


@check("distribution")
def marcum_against_quadrature(seed: int) -> CheckResult:
    worst = 0.0
    for a in (0.5, 2.0, 6.0):
        for b in (0.5, 2.0, 6.0):
            reference = integrate(
                lambda t: stats.rice.pdf(t, a), b, b + a + 40.0, TIGHT_QUADRATURE
            ).value
            worst = max(worst, abs(float(marcum_q1(a, b)) - reference))
    return _result(
        "Marcum Q1 vs quadrature", "distribution", worst <= 1e-9, f"max gap {worst:.2e}"
    )


@check("distribution")
def single_port_is_rayleigh(seed: int) -> CheckResult:
    config = SystemConfig(n_ports=1)
    r = np.linspace(0.0, 4.0, 50)
    exact = evaluate_distribution(config, profile_for(config), r, method="exact").cdf
    gap = float(np.max(np.abs(exact + np.expm1(-(r**2)))))
    samples = draw_best_amplitudes(config, profile_for(config), 20_000, seed)
    pvalue = stats.kstest(samples, stats.rayleigh(scale=np.sqrt(0.5)).cdf).pvalue
    return _result(
        "N=1 Rayleigh",
        "distribution",
        gap <= 1e-10 and pvalue > 1e-3,
        f"max gap {gap:.2e}, KS p-value {pvalue:.3f}",
    )


@check("distribution")
def independent_ports(seed: int) -> CheckResult:
    N = 4
    config = SystemConfig(n_ports=N)
    profile = PortCorrelationProfile(mu=np.array([1.0] + [0.0] * (N - 1)))
    r = np.linspace(0.0, 4.0, 50)
    exact = evaluate_distribution(config, profile, r, method="exact").cdf
    gap = float(np.max(np.abs(exact - (-np.expm1(-(r**2))) ** N)))
    return _result("independent ports", "distribution", gap <= 1e-7, f"max gap {gap:.2e}")


@check("distribution")
def exact_mvti_empirical(seed: int) -> CheckResult:
    config = SystemConfig(n_ports=10, aperture_w=0.5)
    profile = profile_for(config)
    r = np.linspace(0.0, 4.0, 81)
    exact = evaluate_distribution(config, profile, r, method="exact")
    mvti = evaluate_distribution(config, profile, r, method="mvti")
    samples = draw_best_amplitudes(config, profile, 100_000, seed)
    empirical = empirical_from_samples(samples, r)
    mass = integrate(
        lambda x: pdf_on_grid(x, config, profile, "exact"), 0.0, tail_radius(config)
    ).value
    d_emp, d_mvti = exact.sup_distance(empirical), exact.sup_distance(mvti)
    return _result(
        "exact vs MVTI vs MC",
        "distribution",
        d_emp <= 0.01 and d_mvti <= 0.03 and abs(mass - 1.0) <= 1e-6,
        f"sup MC {d_emp:.4f}, sup MVTI {d_mvti:.4f}, mass {mass:.8f}",
    )


@check("bler")
def bounds_decrease_with_snr(seed: int) -> CheckResult:
    base = SystemConfig(n_ports=10, aperture_w=0.5, n_users=10, blocklength=5)
    profile = profile_for(base)
    grid = np.arange(-5.0, 21.0, 5.0)
    conditional = [float(conditional_bler_raw(1.0, base.with_snr_db(s))) for s in grid]
    statistical = [statistical_bler_fas(base.with_snr_db(s), profile).raw_value for s in grid]
    antenna = [bler_l_antenna(3, base.with_snr_db(s)).raw_value for s in grid]
    passed = all(np.all(np.diff(v) < 0) for v in (conditional, statistical, antenna))
    return _result("BLER bounds decrease with SNR", "bler", passed, f"{grid.size} SNR points")


@check("bler")
def exhaustive_ml_below_bound(seed: int) -> CheckResult:
    passed = True
    details = []
    for U, M, N in ML_SCENARIOS:
        for snr_db in (0.0, 6.0, 12.0):
            config = SystemConfig(n_ports=N, n_users=U, blocklength=M).with_snr_db(snr_db)
            profile = profile_for(config)
            mc = mc_ml_bler_small(config, profile, ML_TRIALS, seed)
            bound = statistical_bler_fas(config, profile).value
            passed &= mc.estimate <= bound + 3 * mc.stderr
            details.append(f"{mc.estimate:.3g}<={bound:.3g}")
    return _result("exhaustive ML below bound", "bler", passed, ", ".join(details))


@check("outage")
def mrc_floor_and_fas_without_floor(seed: int) -> CheckResult:
    gamma_th, U = 1e-3, 20
    config = SystemConfig(n_ports=10, aperture_w=0.5, n_users=U, blocklength=5).with_snr_db(60)
    mrc = outage_mrc(gamma_th, 1, U, config.channel_var, config.noise_var)
    floor = -np.expm1(-gamma_th * np.pi * (U - 1) / 4)
    fas = outage_fas(OutageQuery(gamma_th, config), profile_for(config))
    return _result(
        "MRC floor, no FAS floor",
        "outage",
        abs(mrc / floor - 1.0) <= 0.05 and fas < 1e-6,
        f"MRC {mrc:.4g} (floor {floor:.4g}), FAS {fas:.2e}",
    )


@check("outage")
def more_ports_less_outage(seed: int) -> CheckResult:
    passed = True
    for U in range(10, 101, 10):
        values = []
        for N in (5, 10, 25, 50):
            config = SystemConfig(n_ports=N, aperture_w=0.5, n_users=U, blocklength=5)
            config = config.with_snr_db(-35)
            values.append(outage_fas(OutageQuery(1e-4, config), profile_for(config)))
        passed &= bool(np.all(np.diff(values) < 0))
    flat = max(
        abs(
            outage_mrc(1e-4, L, 100, 1.0, 10**3.5) / outage_mrc(1e-4, L, 10, 1.0, 10**3.5) - 1.0
        )
        for L in (3, 5, 7)
    )
    return _result(
        "outage ordering in N",
        "outage",
        passed and flat <= 0.01,
        f"MRC variation in U {flat:.2e}",
    )


@check("montecarlo")
def worker_count_does_not_change_results(seed: int) -> CheckResult:
    config = SystemConfig(n_ports=5, n_users=4, blocklength=5)
    profile = profile_for(config)
    one = draw_best_amplitudes(config, profile, 5000, seed, n_workers=1)
    four = draw_best_amplitudes(config, profile, 5000, seed, n_workers=4)
    report_one = mc_sinr_outage(config, profile, 0.05, 3000, seed, n_workers=1)
    report_four = mc_sinr_outage(config, profile, 0.05, 3000, seed, n_workers=4)
    passed = np.array_equal(one, four) and report_one == report_four
    return _result("seed reproducibility", "montecarlo", passed, "1 vs 4 workers")


@check("montecarlo")
def outage_bound_direction(seed: int) -> CheckResult:
    config = SystemConfig(n_ports=10, aperture_w=0.5, n_users=20, blocklength=5).with_snr_db(-35)
    profile = profile_for(config)
    passed = True
    worst = np.inf
    for gamma_th in (1e-4, 3e-4, 1e-3):
        analytic = outage_fas(OutageQuery(gamma_th, config), profile)
        mc = mc_sinr_outage(config, profile, gamma_th, 20_000, seed)
        passed &= analytic >= mc.estimate - 3 * mc.stderr
        worst = min(worst, analytic - mc.estimate)
    return _result("outage bound above MC", "montecarlo", passed, f"min margin {worst:.3g}")


def run_checks(suite: str = "all", seed: int = 0) -> list[CheckResult]:
    if suite != "all" and suite not in SUITES:
        raise ValueError(f"Unknown suite {suite}, expected all or one of {SUITES}")
    selected = SUITES if suite == "all" else (suite,)
    results = []
    for name in selected:
        for fn in checks[name]:
            logger.info(f"running {fn.__name__}")
            results.append(fn(seed))
    return results


def format_report(results: list[CheckResult]) -> str:
    rows = [[r.suite, r.name, "PASS" if r.passed else "FAIL", r.detail] for r in results]
    return tabulate(rows, headers=["suite", "check", "status", "detail"])
