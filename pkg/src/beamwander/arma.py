"""ARMA(p,q) memory model for beam-centroid traces.

The process is

    x_t = c + sum_i M_i x_{t-i} + sum_j N_j e_{t-j} + e_t,

with e_t zero-mean Gaussian white noise of variance sigma2. The module
covers validation (stationarity/invertibility via polynomial roots),
seeded simulation, conditional-least-squares fitting with a Gauss-Newton
optimizer, AIC/BIC order selection over a grid, and residual whiteness
diagnostics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from statistics import NormalDist

import numpy as np
from scipy.signal import lfilter

from .stats import acf as _acf

GENERATOR_NAME = "numpy.random.PCG64"

# Innovations for simulate() are drawn as
#   np.random.default_rng(seed).normal(0, sqrt(sigma2), n + burn_in)
# which makes the stream reproducible outside this module.


class FitConvergenceError(RuntimeError):
    """Optimizer hit the iteration cap; carries the best iterate found."""

    def __init__(self, message: str, report: "FitReport"):
        super().__init__(message)
        self.report = report


@dataclass
class ArmaModel:
    """ARMA coefficients: constant c, AR weights M, MA weights N,
    innovation variance sigma2, and the trace sample period in seconds."""

    c: float
    ar: list[float]
    ma: list[float]
    sigma2: float
    sample_period: float = 1.0
    units: str = ""

    def __post_init__(self):
        self.ar = [float(v) for v in self.ar]
        self.ma = [float(v) for v in self.ma]
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if not self.sample_period > 0:
            raise ValueError("sample_period must be positive")

    @property
    def p(self) -> int:
        return len(self.ar)

    @property
    def q(self) -> int:
        return len(self.ma)

    def ar_poly(self) -> np.ndarray:
        """phi(z) = 1 - M_1 z - ... - M_p z^p, ascending powers."""
        return np.concatenate(([1.0], -np.asarray(self.ar, dtype=float)))

    def ma_poly(self) -> np.ndarray:
        """theta(z) = 1 + N_1 z + ... + N_q z^q, ascending powers."""
        return np.concatenate(([1.0], np.asarray(self.ma, dtype=float)))

    def to_dict(self) -> dict:
        return {"c": self.c, "ar": list(self.ar), "ma": list(self.ma),
                "sigma2": self.sigma2, "sample_period_s": self.sample_period,
                "units": self.units}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ArmaModel":
        return cls(c=float(d["c"]), ar=list(d["ar"]), ma=list(d["ma"]),
                   sigma2=float(d["sigma2"]),
                   sample_period=float(d.get("sample_period_s", 1.0)),
                   units=str(d.get("units", "")))

    @classmethod
    def from_json(cls, s: str) -> "ArmaModel":
        return cls.from_dict(json.loads(s))


@dataclass
class ValidationReport:
    stationary: bool
    invertible: bool
    ar_root_moduli: list[float]
    ma_root_moduli: list[float]


@dataclass
class FitReport:
    model: ArmaModel
    n: int
    css: float
    loglik: float
    aic: float
    bic: float
    stderr: list[float]
    converged: bool = True
    iterations: int = 0
    stationary: bool = True
    invertible: bool = True


@dataclass
class ResidualDiagnostics:
    acf: np.ndarray
    significance_bound: float
    ljung_box_q: float
    ljung_box_df: int
    ljung_box_critical: float
    skewness: float
    excess_kurtosis: float
    passed: bool


@dataclass
class ScanResult:
    """Order-scan outcome: one row per (p, q) plus the AIC/BIC argmins."""

    rows: list[dict]
    selected_bic: tuple[int, int]
    selected_aic: tuple[int, int]


def _root_moduli(poly_ascending: np.ndarray) -> list[float]:
    # np.roots wants descending powers; strip the constant-only case.
    coeffs = np.asarray(poly_ascending, dtype=float)
    if coeffs.size <= 1:
        return []
    roots = np.roots(coeffs[::-1])
    return sorted(float(abs(r)) for r in roots)


def validate(model: ArmaModel) -> ValidationReport:
    """Root moduli of phi(z) and theta(z); the process is stationary
    (invertible) when every AR (MA) root lies strictly outside the unit
    circle."""
    ar_mod = _root_moduli(model.ar_poly())
    ma_mod = _root_moduli(model.ma_poly())
    return ValidationReport(
        stationary=all(m > 1.0 for m in ar_mod),
        invertible=all(m > 1.0 for m in ma_mod),
        ar_root_moduli=ar_mod,
        ma_root_moduli=ma_mod,
    )


def default_burn_in(p: int, q: int) -> int:
    return max(200, 50 * (p + q + 1))


def simulate(model: ArmaModel, n: int, seed: int, burn_in: int | None = None) -> np.ndarray:
    """Generate n samples of the process from a seeded PCG64 stream.

    The recursion starts from zero initial conditions; the first burn_in
    samples (default max(200, 50(p+q+1))) are discarded. Identical
    (model, n, seed, burn_in) yield identical output.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    rep = validate(model)
    if not rep.stationary:
        raise ValueError(f"model is not stationary (AR root moduli {rep.ar_root_moduli})")
    if not rep.invertible:
        raise ValueError(f"model is not invertible (MA root moduli {rep.ma_root_moduli})")
    if burn_in is None:
        burn_in = default_burn_in(model.p, model.q)
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    rng = np.random.default_rng(seed)
    eps = rng.normal(0.0, math.sqrt(model.sigma2), n + burn_in)
    phi = model.ar_poly()
    theta = model.ma_poly()
    x = lfilter(theta, phi, eps)
    if model.c != 0.0:
        x = x + lfilter([1.0], phi, np.full(n + burn_in, model.c))
    return x[burn_in:]


def residuals(model: ArmaModel, series) -> np.ndarray:
    """Invert the recursion: e_t = x_t - c - sum M_i x_{t-i} - sum N_j e_{t-j},
    with zero pre-sample terms. Output length equals input length."""
    x = np.asarray(series, dtype=float)
    phi = model.ar_poly()
    theta = model.ma_poly()
    eps = lfilter(phi, theta, x)
    if model.c != 0.0:
        eps = eps - model.c * lfilter([1.0], theta, np.ones(x.size))
    return eps


def information_criteria(loglik: float, k: int, n: int) -> tuple[float, float]:
    """AIC = 2k - 2 loglik; BIC = k ln(n) - 2 loglik."""
    if n <= k:
        raise ValueError("need n > k")
    return 2.0 * k - 2.0 * loglik, k * math.log(n) - 2.0 * loglik


def _unpack(params: np.ndarray, p: int, q: int, estimate_c: bool):
    i = 0
    c = params[0] if estimate_c else 0.0
    i += 1 if estimate_c else 0
    ar = params[i:i + p]
    ma = params[i + p:i + p + q]
    return float(c), ar, ma


def _css_residuals(params: np.ndarray, x: np.ndarray, p: int, q: int,
                   estimate_c: bool) -> np.ndarray:
    c, ar, ma = _unpack(params, p, q, estimate_c)
    phi = np.concatenate(([1.0], -ar))
    theta = np.concatenate(([1.0], ma))
    # trial steps may cross into explosive theta territory; the resulting
    # inf/nan CSS is rejected by the line search, so silence the overflow
    with np.errstate(over="ignore", invalid="ignore"):
        eps = lfilter(phi, theta, x)
        if c != 0.0:
            eps = eps - c * lfilter([1.0], theta, np.ones(x.size))
    return eps


def _css(params, x, p, q, estimate_c) -> float:
    eps = _css_residuals(params, x, p, q, estimate_c)
    with np.errstate(over="ignore", invalid="ignore"):
        s = float(np.dot(eps, eps))
    return s if np.isfinite(s) else float("inf")


def _hannan_rissanen(x: np.ndarray, p: int, q: int, estimate_c: bool) -> np.ndarray:
    """Two-stage initial estimate: long-AR regression for innovation
    proxies, then OLS of x on its own lags and the proxy lags. Falls back
    to zeros (c to the sample mean) if either regression is singular."""
    n = x.size
    k = (1 if estimate_c else 0) + p + q
    fallback = np.zeros(k)
    if estimate_c:
        fallback[0] = x.mean()
    if p + q == 0:
        return fallback
    m = min(20, n // 10)
    m = max(m, 1)
    try:
        rows = n - m
        A = np.empty((rows, m + 1))
        A[:, 0] = 1.0
        for i in range(1, m + 1):
            A[:, i] = x[m - i:n - i]
        coef, *_ = np.linalg.lstsq(A, x[m:], rcond=None)
        eps_hat = np.zeros(n)
        eps_hat[m:] = x[m:] - A @ coef

        start = m + max(p, q)
        rows = n - start
        if rows <= k:
            return fallback
        cols = []
        if estimate_c:
            cols.append(np.ones(rows))
        for i in range(1, p + 1):
            cols.append(x[start - i:n - i])
        for j in range(1, q + 1):
            cols.append(eps_hat[start - j:n - j])
        B = np.column_stack(cols)
        beta, *_ = np.linalg.lstsq(B, x[start:], rcond=None)
        if not np.all(np.isfinite(beta)):
            return fallback
        return beta
    except np.linalg.LinAlgError:
        return fallback


def _jacobian(params: np.ndarray, x: np.ndarray, p: int, q: int,
              estimate_c: bool) -> np.ndarray:
    """Central finite-difference Jacobian of the residual vector."""
    k = params.size
    J = np.empty((x.size, k))
    for i in range(k):
        h = 1e-6 * (1.0 + abs(params[i]))
        up = params.copy(); up[i] += h
        dn = params.copy(); dn[i] -= h
        J[:, i] = (_css_residuals(up, x, p, q, estimate_c)
                   - _css_residuals(dn, x, p, q, estimate_c)) / (2.0 * h)
    return J


def _gauss_newton(params0: np.ndarray, x: np.ndarray, p: int, q: int,
                  estimate_c: bool, max_iter: int, tol: float):
    """Damped Gauss-Newton on the CSS objective from one starting point.

    Finite-difference Jacobian, step-halving line search; converged when
    the relative CSS change drops below tol or no descent step remains.
    """
    params = params0.copy()
    css = _css(params, x, p, q, estimate_c)
    if params.size == 0:
        return params, css, 0, True
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        eps = _css_residuals(params, x, p, q, estimate_c)
        J = _jacobian(params, x, p, q, estimate_c)
        step, *_ = np.linalg.lstsq(J, -eps, rcond=None)
        new_css = None
        t = 1.0
        for _ in range(40):
            trial = params + t * step
            s = _css(trial, x, p, q, estimate_c)
            if s < css:
                new_css = s
                params = trial
                break
            t *= 0.5
        if new_css is None:
            converged = True  # no descent direction left
            break
        if abs(css - new_css) <= tol * max(css, 1e-300):
            css = new_css
            converged = True
            break
        css = new_css
    return params, css, iterations, converged


def fit_css(series, p: int, q: int, estimate_c: bool = True,
            sample_period: float = 1.0, units: str = "",
            max_iter: int = 500, tol: float = 1e-10,
            start_params=None) -> FitReport:
    """Conditional-least-squares ARMA fit.

    Minimizes the conditional sum of squared innovations (zero pre-sample
    terms) by damped Gauss-Newton: finite-difference Jacobian, step-halving
    line search, iteration cap 500, convergence when the relative CSS
    change drops below 1e-10. The optimizer starts from the Hannan-Rissanen
    two-stage estimate (zeros when that regression is singular) and, when
    start_params is supplied (e.g. a smaller nested fit padded with zeros),
    also from there; the lowest CSS wins. Standard errors come from the
    numerical curvature
    (Gauss-Newton J'J) of the objective at the optimum.

    A fitted model that violates stationarity or invertibility is returned
    with the corresponding report flags set to False, never silently.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    if n <= 10 * (p + q + 1):
        raise ValueError(f"series too short: need n > {10 * (p + q + 1)}, got {n}")

    hr = _hannan_rissanen(x, p, q, estimate_c)
    if not np.isfinite(_css(hr, x, p, q, estimate_c)):
        hr = np.zeros_like(hr)
    k_opt = hr.size
    starts = [hr]
    if start_params is not None:
        sp = np.asarray(start_params, dtype=float)
        if sp.size != k_opt:
            raise ValueError(f"start_params must have {k_opt} entries")
        if np.isfinite(_css(sp, x, p, q, estimate_c)):
            starts.append(sp)

    params = hr
    css = float("inf")
    converged = k_opt == 0
    iterations = 0
    for s0 in starts:
        pp, cc, it, conv = _gauss_newton(s0, x, p, q, estimate_c, max_iter, tol)
        iterations = max(iterations, it)
        if cc < css:
            params, css, converged = pp, cc, conv

    c, ar, ma = _unpack(params, p, q, estimate_c)
    dof = n - p - q - 1
    sigma2 = css / dof if dof > 0 else css / n
    sigma2 = max(sigma2, 1e-300)
    loglik = -0.5 * n * (math.log(2.0 * math.pi * css / n) + 1.0) if css > 0 else 0.0
    k_ic = k_opt + 1  # + innovation variance
    aic, bic = information_criteria(loglik, k_ic, n)

    stderr = [float("nan")] * k_opt
    if k_opt > 0:
        J = _jacobian(params, x, p, q, estimate_c)
        try:
            cov = sigma2 * np.linalg.inv(J.T @ J)
            diag = np.diag(cov)
            stderr = [math.sqrt(v) if v > 0 else float("nan") for v in diag]
        except np.linalg.LinAlgError:
            pass

    model = ArmaModel(c=c, ar=list(ar), ma=list(ma), sigma2=sigma2,
                      sample_period=sample_period, units=units)
    rep = validate(model)
    report = FitReport(model=model, n=n, css=css, loglik=loglik, aic=aic,
                       bic=bic, stderr=stderr, converged=converged,
                       iterations=iterations, stationary=rep.stationary,
                       invertible=rep.invertible)
    if not converged:
        raise FitConvergenceError(
            f"CSS optimizer did not converge in {max_iter} iterations", report)
    return report


def _pad_start(report: FitReport, p: int, q: int, estimate_c: bool) -> np.ndarray:
    """Parameter vector of a smaller fitted model, zero-padded to (p, q)."""
    m = report.model
    parts = []
    if estimate_c:
        parts.append([m.c])
    parts.append(m.ar + [0.0] * (p - m.p))
    parts.append(m.ma + [0.0] * (q - m.q))
    return np.concatenate(parts) if parts else np.zeros(0)


def order_scan(series, p_max: int, q_max: int, estimate_c: bool = True,
               sample_period: float = 1.0) -> ScanResult:
    """Fit every (p, q) on the grid and select the BIC argmin.

    Grid cells are fitted in increasing order and each is warm-started from
    its converged (p-1, q) and (p, q-1) neighbors, so the CSS of nested
    models is non-increasing across the grid. Non-convergent and
    non-stationary fits are recorded but excluded from selection; the AIC
    argmin is reported alongside.
    """
    if p_max < 0 or q_max < 0:
        raise ValueError("p_max and q_max must be >= 0")
    rows = []
    fitted: dict[tuple[int, int], FitReport] = {}
    for p in range(p_max + 1):
        for q in range(q_max + 1):
            row = {"p": p, "q": q, "converged": False, "stationary": False,
                   "invertible": False, "aic": float("nan"),
                   "bic": float("nan"), "css": float("nan"), "error": None}
            starts = []
            for prev in ((p - 1, q), (p, q - 1)):
                if prev in fitted:
                    starts.append((_pad_start(fitted[prev], p, q, estimate_c),
                                   fitted[prev].css))
            start = min(starts, key=lambda t: t[1])[0] if starts else None
            try:
                rep = fit_css(series, p, q, estimate_c=estimate_c,
                              sample_period=sample_period, start_params=start)
                fitted[(p, q)] = rep
                row.update(converged=rep.converged, stationary=rep.stationary,
                           invertible=rep.invertible, aic=rep.aic,
                           bic=rep.bic, css=rep.css)
            except FitConvergenceError as exc:
                fitted[(p, q)] = exc.report
                row.update(aic=exc.report.aic, bic=exc.report.bic,
                           css=exc.report.css,
                           stationary=exc.report.stationary,
                           invertible=exc.report.invertible,
                           error="no convergence")
            except (ValueError, np.linalg.LinAlgError) as exc:
                row["error"] = str(exc)
            rows.append(row)
    admissible = [r for r in rows if r["converged"] and r["stationary"]
                  and math.isfinite(r["bic"])]
    if not admissible:
        raise RuntimeError("order scan produced no admissible fits")
    best_bic = min(admissible, key=lambda r: r["bic"])
    best_aic = min(admissible, key=lambda r: r["aic"])
    return ScanResult(rows=rows,
                      selected_bic=(best_bic["p"], best_bic["q"]),
                      selected_aic=(best_aic["p"], best_aic["q"]))


def chi2_quantile(prob: float, df: int) -> float:
    """Chi-square quantile via the Wilson-Hilferty cube approximation."""
    if df < 1:
        raise ValueError("df must be >= 1")
    z = NormalDist().inv_cdf(prob)
    a = 2.0 / (9.0 * df)
    return df * (1.0 - a + z * math.sqrt(a)) ** 3


def diagnose_residuals(res, max_lag: int = 20, n_model_params: int = 0,
                       significance: float = 0.99) -> ResidualDiagnostics:
    """Whiteness diagnostics for a residual series.

    Computes the residual ACF with its 95% band, the Ljung-Box portmanteau
    statistic Q = n(n+2) sum_k rho_k^2/(n-k) with df = max_lag minus the
    number of fitted ARMA coefficients, and sample skewness / excess
    kurtosis. The pass flag requires Q below the chi-square critical value
    at `significance` and every lag within a Bonferroni-adjusted band
    (family-wise 5% across max_lag lags), so that true white noise passes
    at roughly the nominal rate instead of failing once any single lag
    strays outside the per-lag 95% band.
    """
    x = np.asarray(res, dtype=float)
    n = x.size
    r = _acf(x, max_lag)
    rho = r.values[1:]
    q_stat = float(n * (n + 2) * np.sum(rho**2 / (n - np.arange(1, max_lag + 1))))
    df = max(max_lag - n_model_params, 1)
    crit = chi2_quantile(significance, df)
    # Bonferroni per-lag band: two-sided 5% split across max_lag lags.
    z_fw = NormalDist().inv_cdf(1.0 - 0.05 / (2.0 * max_lag))
    fw_bound = z_fw / math.sqrt(n)
    xc = x - x.mean()
    m2 = float(np.mean(xc**2))
    skew = float(np.mean(xc**3) / m2**1.5) if m2 > 0 else 0.0
    exkurt = float(np.mean(xc**4) / m2**2 - 3.0) if m2 > 0 else 0.0
    passed = bool(q_stat < crit and np.all(np.abs(rho) < fw_bound))
    return ResidualDiagnostics(acf=r.values, significance_bound=r.significance_bound,
                               ljung_box_q=q_stat, ljung_box_df=df,
                               ljung_box_critical=crit, skewness=skew,
                               excess_kurtosis=exkurt, passed=passed)


def stationary_variance(model: ArmaModel, n_terms: int = 20000) -> float:
    """Stationary process variance sigma2 * sum psi_j^2 from the impulse
    response of theta(B)/phi(B), truncated at n_terms."""
    rep = validate(model)
    if not rep.stationary:
        raise ValueError("model is not stationary")
    impulse = np.zeros(n_terms)
    impulse[0] = 1.0
    psi = lfilter(model.ma_poly(), model.ar_poly(), impulse)
    return float(model.sigma2 * np.dot(psi, psi))
