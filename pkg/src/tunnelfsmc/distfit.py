"""Fading-family fits, AICc model selection, and the SNR density.

Candidate amplitude families are Rayleigh, Rice, and Nakagami, fitted by
maximum likelihood. Families are scored with AIC and its small-sample
correction AICc; AICc always drives selection. The SNR density used by
the quantizer is the Gamma form with shape ``m`` and mean ``mean_snr``
(Nakagami fading factor and mean SNR), fitted directly on SNR samples in
their native unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .errors import (DegenerateSampleError, DomainError, FitError,
                     InsufficientDataError, SelectionError)

FAMILIES = ("rayleigh", "rice", "nakagami")
PARAM_COUNT = {"rayleigh": 1, "rice": 2, "nakagami": 2}

M_MIN = 0.5
M_MAX = 500.0

_RICE_MAX_ITER = 200
_RICE_TOL = 1e-8


@dataclass(frozen=True)
class FamilyParams:
    """A fitted fading family: name plus its named parameters."""

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}")
        expected = {"rayleigh": {"sigma"}, "rice": {"nu", "sigma"},
                    "nakagami": {"m", "omega"}}[self.family]
        if set(self.params) != expected:
            raise DomainError(
                f"{self.family} expects parameters {sorted(expected)}")
        p = self.params
        if self.family == "rayleigh" and not p["sigma"] > 0:
            raise DomainError("rayleigh sigma must be positive")
        if self.family == "rice" and not (p["nu"] >= 0 and p["sigma"] > 0):
            raise DomainError("rice requires nu >= 0 and sigma > 0")
        if self.family == "nakagami" and not (p["m"] >= M_MIN and p["omega"] > 0):
            raise DomainError(f"nakagami requires m >= {M_MIN} and omega > 0")

    @property
    def eta(self) -> int:
        return PARAM_COUNT[self.family]


@dataclass(frozen=True)
class FitResult:
    """Maximum-likelihood fit of one family with its information criteria.

    ``aicc`` is +inf when the correction term is undefined (n <= eta + 1),
    which sorts such fits last during selection.
    """

    params: FamilyParams
    loglik: float
    n: int
    aic: float
    aicc: float

    @property
    def family(self) -> str:
        return self.params.family


def aicc_score(loglik: float, eta: int, n: int) -> tuple[float, float]:
    """AIC and small-sample-corrected AICc for a maximized log-likelihood."""
    if n <= eta + 1:
        raise InsufficientDataError(
            f"AICc correction undefined for n={n}, eta={eta} (need n > eta+1)")
    aic = -2.0 * loglik + 2.0 * eta
    return aic, aic + 2.0 * eta * (eta + 1) / (n - eta - 1)


def _make_result(params: FamilyParams, loglik: float, n: int) -> FitResult:
    eta = params.eta
    aic = -2.0 * loglik + 2.0 * eta
    if n > eta + 1:
        aicc = aic + 2.0 * eta * (eta + 1) / (n - eta - 1)
    else:
        aicc = math.inf
    return FitResult(params, float(loglik), int(n), float(aic), float(aicc))


def _check_samples(samples, minimum: int = 2) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < minimum:
        raise InsufficientDataError(f"need at least {minimum} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise FitError("samples contain non-finite values")
    if np.any(x <= 0):
        raise FitError("samples must be strictly positive")
    return x


def fit_rayleigh(samples) -> FitResult:
    """Closed-form Rayleigh MLE: sigma^2 = mean(x^2) / 2."""
    x = _check_samples(samples)
    sigma_sq = float(np.mean(x * x)) / 2.0
    loglik = float(np.sum(np.log(x)) - x.size * np.log(sigma_sq)
                   - np.sum(x * x) / (2.0 * sigma_sq))
    params = FamilyParams("rayleigh", {"sigma": math.sqrt(sigma_sq)})
    return _make_result(params, loglik, x.size)


def _rice_negloglik_and_grad(theta, x, x_sq):
    nu, sigma = theta
    sigma_sq = sigma * sigma
    z = x * nu / sigma_sq
    # log I0(z) = log(i0e(z)) + z, stable for large z
    log_i0 = np.log(special.i0e(z)) + z
    ll = np.sum(np.log(x)) - x.size * np.log(sigma_sq) \
        - np.sum(x_sq + nu * nu) / (2.0 * sigma_sq) + np.sum(log_i0)
    ratio = special.i1e(z) / special.i0e(z)  # I1/I0
    d_nu = -x.size * nu / sigma_sq + np.sum(ratio * x) / sigma_sq
    d_sigma = (-2.0 * x.size / sigma
               + np.sum(x_sq + nu * nu) / (sigma_sq * sigma)
               - 2.0 * nu * np.sum(ratio * x) / (sigma_sq * sigma))
    return -ll, np.array([-d_nu, -d_sigma])


def _rice_moment_init(x: np.ndarray) -> tuple[float, float]:
    # fourth-moment inversion: E[x^2] = nu^2 + 2 s^2, E[x^4] - E[x^2]^2 = 4 s^2 (nu^2 + s^2)
    a = float(np.mean(x * x))
    b = float(np.mean(x ** 4))
    sigma_sq = 0.5 * (a - math.sqrt(max(2.0 * a * a - b, 0.0)))
    sigma_sq = min(max(sigma_sq, 1e-6 * a), 0.5 * a)
    nu_sq = max(a - 2.0 * sigma_sq, 0.0)
    return math.sqrt(nu_sq), math.sqrt(sigma_sq)


def fit_rice(samples) -> FitResult:
    """Rice MLE by bounded quasi-Newton maximization.

    Deterministic: starts from a fourth-moment initializer and from the
    Rayleigh boundary (nu = 0), keeping the better optimum, so the fitted
    log-likelihood never falls below the nested Rayleigh fit.
    """
    x = _check_samples(samples)
    scale = float(np.sqrt(np.mean(x * x)))
    y = x / scale
    y_sq = y * y
    sigma_ray = math.sqrt(float(np.mean(y_sq)) / 2.0)

    starts = [_rice_moment_init(y), (0.0, sigma_ray)]
    best = None
    diagnostics = []
    for start in starts:
        res = optimize.minimize(
            _rice_negloglik_and_grad, np.array(start), args=(y, y_sq),
            jac=True, method="L-BFGS-B",
            bounds=[(0.0, None), (1e-9, None)],
            options={"maxiter": _RICE_MAX_ITER, "ftol": 1e-14,
                     "gtol": _RICE_TOL},
        )
        diagnostics.append(f"start={start}: nit={res.nit}, {res.message}")
        if not np.all(np.isfinite(res.x)) or not math.isfinite(res.fun):
            continue
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise FitError("rice fit did not converge: " + " | ".join(diagnostics))

    # boundary candidate keeps the Rayleigh nesting exact even if the line
    # search stops a hair short of it
    f_boundary, _ = _rice_negloglik_and_grad(np.array([0.0, sigma_ray]), y, y_sq)
    if f_boundary < best.fun:
        nu, sigma = 0.0, sigma_ray
        negll = f_boundary
    else:
        nu, sigma = float(best.x[0]), float(best.x[1])
        negll = float(best.fun)
    loglik = -negll - x.size * math.log(scale)
    params = FamilyParams("rice", {"nu": nu * scale, "sigma": sigma * scale})
    return _make_result(params, loglik, x.size)


def _gamma_shape_from_spread(s: float) -> float:
    """Solve log(k) - digamma(k) = s by Newton from the Greenwood-Durand
    start. The left side is strictly decreasing and convex in k."""
    if not s > 0:
        raise DegenerateSampleError(
            "samples carry no spread; shape estimate diverges")
    k = (3.0 - s + math.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)
    for _ in range(100):
        g = math.log(k) - special.digamma(k) - s
        dg = 1.0 / k - special.polygamma(1, k)
        step = g / dg
        k_new = k - step
        if not (k_new > 0 and math.isfinite(k_new)):
            k_new = k / 2.0 if g < 0 else k * 2.0
        if abs(k_new - k) <= 1e-12 * max(1.0, k):
            return float(k_new)
        k = k_new
    return float(k)


def fit_nakagami(samples) -> FitResult:
    """Nakagami MLE: omega = mean(x^2) closed form; m solves the digamma
    equation on the squared samples. m is clamped to [0.5, 500]."""
    x = _check_samples(samples)
    x_sq = x * x
    omega = float(np.mean(x_sq))
    log_xsq = np.log(x_sq)
    s = math.log(omega) - float(np.mean(log_xsq))
    m = _gamma_shape_from_spread(s)
    m = min(max(m, M_MIN), M_MAX)
    loglik = float(
        x.size * (math.log(2.0) + m * math.log(m) - special.gammaln(m)
                  - m * math.log(omega))
        + (2.0 * m - 1.0) * np.sum(np.log(x)) - m * np.sum(x_sq) / omega)
    params = FamilyParams("nakagami", {"m": float(m), "omega": omega})
    return _make_result(params, loglik, x.size)


_FITTERS = {"rayleigh": fit_rayleigh, "rice": fit_rice, "nakagami": fit_nakagami}


def select_model(samples, candidates=FAMILIES) -> FitResult:
    """Fit every candidate family and return the smallest-AICc winner.

    Ties break toward fewer parameters, then the fixed order
    rayleigh < rice < nakagami, so selection is fully deterministic.
    """
    names = list(candidates)
    if not names:
        raise DomainError("candidate set is empty")
    unknown = [c for c in names if c not in FAMILIES]
    if unknown:
        raise DomainError(f"unknown candidate families: {unknown}")
    fits: list[FitResult] = []
    failures: dict[str, str] = {}
    for name in FAMILIES:
        if name not in names:
            continue
        try:
            fits.append(_FITTERS[name](samples))
        except Exception as exc:  # tallied, reported if nothing fits
            failures[name] = str(exc)
    if not fits:
        raise SelectionError(failures)
    return min(fits, key=lambda f: (f.aicc, f.params.eta, FAMILIES.index(f.family)))


@dataclass(frozen=True)
class SelectionTally:
    """Per-family AICc win counts over a sequence of interval slices.

    ``skipped`` lists interval indices with fewer than the minimum sample
    count (including empty ones); ``failed`` lists intervals where every
    candidate fit raised. counts sum to the number of scored slices.
    """

    counts: dict
    skipped: tuple
    failed: tuple

    @property
    def scored(self) -> int:
        return sum(self.counts.values())


def selection_histogram(slices, candidates=FAMILIES,
                        min_samples: int = 10) -> SelectionTally:
    """AICc selection frequencies across interval slices."""
    counts = {name: 0 for name in FAMILIES if name in set(candidates)}
    skipped = []
    failed = []
    for sl in slices:
        if len(sl) < min_samples:
            skipped.append(sl.index)
            continue
        try:
            winner = select_model(sl.snrs, candidates)
        except SelectionError:
            failed.append(sl.index)
            continue
        counts[winner.family] += 1
    return SelectionTally(counts, tuple(skipped), tuple(failed))


@dataclass(frozen=True)
class SnrPdf:
    """Gamma-form SNR density with shape ``m`` and mean ``mean_snr``:

        p(x) = m^m x^(m-1) / (mean^m Gamma(m)) * exp(-m x / mean)
    """

    m: float
    mean_snr: float

    def __post_init__(self):
        if not (self.m >= M_MIN and math.isfinite(self.m)):
            raise DomainError(f"fading factor m must be >= {M_MIN}")
        if not (self.mean_snr > 0 and math.isfinite(self.mean_snr)):
            raise DomainError("mean SNR must be positive")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        m, mean = self.m, self.mean_snr
        with np.errstate(divide="ignore"):
            log_p = (m * math.log(m) + (m - 1.0) * np.log(x[pos])
                     - m * math.log(mean) - special.gammaln(m)
                     - m * x[pos] / mean)
        out[pos] = np.exp(log_p)
        if out.ndim == 0:
            return float(out)
        return out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        val = special.gammainc(self.m, self.m * np.clip(x, 0.0, None) / self.mean_snr)
        return float(val) if val.ndim == 0 else val

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        val = self.mean_snr / self.m * special.gammaincinv(self.m, q)
        return float(val) if val.ndim == 0 else val

    def partial_moment(self, a: float, b: float, order: int = 0) -> float:
        """Integral of x^order * p(x) over [a, b], closed form through the
        regularized lower incomplete gamma. ``b`` may be +inf."""
        return partial_moment(self, a, b, order)


def partial_moment(pdf: SnrPdf, a: float, b: float, order: int = 0) -> float:
    """Partial moments of the Gamma-form SNR density over [a, b]."""
    if not 0 <= a < b:
        raise DomainError(f"need 0 <= a < b, got a={a}, b={b}")
    if order not in (0, 1, 2):
        raise DomainError("order must be 0, 1, or 2")
    m, mean = pdf.m, pdf.mean_snr
    lo = m * a / mean
    hi = m * b / mean if math.isfinite(b) else math.inf
    if order == 0:
        coeff, shape = 1.0, m
    elif order == 1:
        coeff, shape = mean, m + 1.0
    else:
        coeff, shape = mean * mean * (m + 1.0) / m, m + 2.0
    upper = 1.0 if math.isinf(hi) else float(special.gammainc(shape, hi))
    return coeff * (upper - float(special.gammainc(shape, lo)))


def snr_pdf(snr_samples) -> SnrPdf:
    """Fit the Gamma-form SNR density: mean = sample mean, shape from the
    Gamma ML equations (same digamma solve as the Nakagami shape)."""
    x = _check_samples(snr_samples)
    mean = float(np.mean(x))
    s = math.log(mean) - float(np.mean(np.log(x)))
    m = _gamma_shape_from_spread(s)
    return SnrPdf(min(max(m, M_MIN), M_MAX), mean)


__all__ = [
    "FAMILIES", "FamilyParams", "FitResult", "SnrPdf", "SelectionTally",
    "aicc_score", "fit_rayleigh", "fit_rice", "fit_nakagami",
    "select_model", "selection_histogram", "snr_pdf", "partial_moment",
]
