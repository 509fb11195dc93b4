"""Linear seasonal AR with exogenous inputs (SARX), the copy-previous
predictor, and ACF/PACF diagnostics for order selection."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import (
    ConfigurationError,
    ExogenousHorizonError,
    InstabilityError,
    RankDeficiencyError,
    WindowRangeError,
)
from .windowing import SeasonalSpec, TimeSeries, check_anchor


@dataclass
class SarxCoeffs:
    """Coefficients of

    y(t) = intercept + sum_i a_i y(t-i) + sum_k sum_j b[k][j] y(t-kS-j)
           + c[0] . x(t) + sum_s c[s] . x(lag_s)

    where ``b[k-1][0]`` multiplies y(t-kS) and the exogenous slots follow the
    endogenous lag order (standard lags, then for each cycle the anchor lag and
    its group).
    """

    a: np.ndarray
    b: list
    c: np.ndarray = None
    intercept: float = 0.0
    residual_variance: float = float("nan")
    std_errors: dict = field(default=None, repr=False)

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64)
        self.b = [np.asarray(row, dtype=np.float64) for row in self.b]

    def check(self, spec: SeasonalSpec, n_exog: int) -> None:
        if self.a.shape != (spec.p,):
            raise ConfigurationError(f"a has shape {self.a.shape}, spec needs ({spec.p},)")
        if len(self.b) != spec.P or any(r.size != q + 1 for r, q in zip(self.b, spec.Q)):
            raise ConfigurationError("b does not match the seasonal group sizes")
        if n_exog and (self.c is None or self.c.shape != (n_lag_slots(spec) + 1, n_exog)):
            raise ConfigurationError(f"c must have shape ({n_lag_slots(spec) + 1}, {n_exog})")

    def endogenous_vector(self) -> np.ndarray:
        return np.concatenate([self.a] + list(self.b))

    def to_dict(self) -> dict:
        return {"a": self.a.tolist(), "b": [r.tolist() for r in self.b],
                "c": None if self.c is None else np.asarray(self.c).tolist(),
                "intercept": float(self.intercept), "residual_variance": float(self.residual_variance)}

    @classmethod
    def from_dict(cls, d: dict) -> "SarxCoeffs":
        c = d.get("c")
        return cls(d["a"], d["b"], None if c is None else np.asarray(c, dtype=np.float64),
                   d.get("intercept", 0.0), d.get("residual_variance", float("nan")))


@dataclass
class NoiseSpec:
    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigurationError("noise standard deviation must be >= 0")


def lag_offsets(spec: SeasonalSpec) -> np.ndarray:
    """Positive lags of every endogenous regressor, in coefficient order."""
    lags = list(range(1, spec.p + 1))
    for k, q in enumerate(spec.Q, start=1):
        lags.extend(k * spec.S + j for j in range(q + 1))
    return np.asarray(lags, dtype=np.int64)


def n_lag_slots(spec: SeasonalSpec) -> int:
    return spec.p + sum(q + 1 for q in spec.Q)


def column_names(spec: SeasonalSpec, n_exog: int) -> list[str]:
    names = ["intercept"] + [f"y(t-{l})" for l in lag_offsets(spec)]
    if n_exog:
        for l in [0] + list(lag_offsets(spec)):
            tag = "t" if l == 0 else f"t-{l}"
            names.extend(f"x{j + 1}({tag})" for j in range(n_exog))
    return names


def expand_multiplicative(psi: Sequence[float], Psi: Sequence[float], spec: SeasonalSpec) -> SarxCoeffs:
    """Unconstrained coefficients equivalent to the product
    (1 - sum psi_i L^i)(1 - sum Psi_k L^{kS})."""
    psi = np.asarray(psi, dtype=np.float64)
    Psi = np.asarray(Psi, dtype=np.float64)
    if psi.size != spec.p or Psi.size != spec.P:
        raise ConfigurationError(f"need {spec.p} standard and {spec.P} seasonal coefficients")
    if any(q != spec.p for q in spec.Q):
        raise ConfigurationError(f"multiplicative form requires every Q_i == p={spec.p}, got {spec.Q}")
    b = [np.concatenate([[Psi[k]], -psi * Psi[k]]) for k in range(spec.P)]
    return SarxCoeffs(psi.copy(), b, None, 0.0)


def design_row(y: np.ndarray, x: np.ndarray, spec: SeasonalSpec, t: int) -> np.ndarray:
    lags = lag_offsets(spec)
    parts = [[1.0], y[t - lags]]
    if x.shape[1]:
        parts.append(x[t].ravel())
        parts.append(x[t - lags].ravel())
    return np.concatenate(parts)


def design_matrix(ts: TimeSeries, spec: SeasonalSpec, anchors) -> tuple[np.ndarray, np.ndarray]:
    anchors = np.asarray(list(anchors), dtype=np.int64)
    lags = lag_offsets(spec)
    idx = anchors[:, None] - lags[None, :]
    cols = [np.ones((anchors.size, 1)), ts.y[idx]]
    if ts.n_exog:
        cols.append(ts.x[anchors])
        cols.append(ts.x[idx].reshape(anchors.size, -1))
    return np.hstack(cols), ts.y[anchors]


def _coeffs_from_vector(beta: np.ndarray, spec: SeasonalSpec, n_exog: int) -> SarxCoeffs:
    intercept = beta[0]
    pos = 1
    a = beta[pos:pos + spec.p]
    pos += spec.p
    b = []
    for q in spec.Q:
        b.append(beta[pos:pos + q + 1])
        pos += q + 1
    c = beta[pos:].reshape(-1, n_exog) if n_exog else None
    return SarxCoeffs(a, b, c, float(intercept))


def _coeffs_to_vector(coeffs: SarxCoeffs) -> np.ndarray:
    parts = [[coeffs.intercept], coeffs.a] + list(coeffs.b)
    if coeffs.c is not None:
        parts.append(np.asarray(coeffs.c).ravel())
    return np.concatenate(parts)


def fit_sarx(ts: TimeSeries, spec: SeasonalSpec, anchors=None, rtol: float = 1e-10) -> SarxCoeffs:
    """Ordinary least squares via a Householder QR of the design matrix.

    ``anchors`` defaults to every index with a full lag history. Rank
    deficiency (a diagonal entry of R below ``rtol`` times the largest)
    raises with the offending column names.
    """
    if anchors is None:
        anchors = range(spec.min_history, len(ts))
    anchors = [t for t in anchors]
    if any(t < spec.min_history or t >= len(ts) for t in anchors):
        raise WindowRangeError("fit_sarx anchors outside the series history", bound="history")
    X, y = design_matrix(ts, spec, anchors)
    n, k = X.shape
    if n < k:
        raise ConfigurationError(f"{n} anchors cannot identify {k} coefficients")
    Qm, R = np.linalg.qr(X, mode="reduced")
    diag = np.abs(np.diag(R))
    bad = np.flatnonzero(diag <= rtol * max(diag.max(), 1e-300))
    if bad.size:
        names = column_names(spec, ts.n_exog)
        raise RankDeficiencyError([names[i] for i in bad])
    beta = solve_triangular(R, Qm.T @ y)
    resid = y - X @ beta
    dof = n - k
    sigma2 = float(resid @ resid / dof) if dof > 0 else float("nan")
    Rinv = solve_triangular(R, np.eye(k))
    se = np.sqrt(np.maximum(sigma2, 0.0) * np.sum(Rinv * Rinv, axis=1))
    coeffs = _coeffs_from_vector(beta, spec, ts.n_exog)
    coeffs.residual_variance = sigma2
    coeffs.std_errors = dict(zip(column_names(spec, ts.n_exog), se))
    return coeffs


def sarx_one_step(coeffs: SarxCoeffs, y: np.ndarray, x: np.ndarray, spec: SeasonalSpec, t: int) -> float:
    if coeffs.c is None:
        x = x[:, :0]
    return float(design_row(y, x, spec, t) @ _coeffs_to_vector(coeffs))


def predict_sarx_recursive(coeffs: SarxCoeffs, ts: TimeSeries, spec: SeasonalSpec, t: int, K: int | None = None,
                           future_x=None) -> np.ndarray:
    """K+1 forecasts from anchor ``t`` by iterating the one-step formula,
    substituting earlier forecasts for y(t), y(t+1), ... ."""
    K = spec.K if K is None else K
    check_anchor(spec, len(ts), t, need_targets=False)
    x = _extend_exog(ts, t + K, future_x)
    if coeffs.c is None:
        x = x[:, :0]
    buf = np.concatenate([ts.y[:t], np.zeros(K + 1)])
    vec = _coeffs_to_vector(coeffs)
    for k in range(K + 1):
        buf[t + k] = design_row(buf, x, spec, t + k) @ vec
    return buf[t:t + K + 1].copy()


def _extend_exog(ts: TimeSeries, last: int, future_x) -> np.ndarray:
    x = ts.x
    if future_x is not None:
        future_x = np.asarray(future_x, dtype=np.float64).reshape(-1, ts.n_exog)
        x = np.vstack([x, future_x])
    if ts.n_exog and x.shape[0] <= last:
        raise ExogenousHorizonError(f"exogenous horizon unavailable: need x up to index {last}, have {x.shape[0] - 1}")
    if x.shape[0] <= last:
        x = np.vstack([x, np.zeros((last + 1 - x.shape[0], 0))])
    return x


def copy_previous(ts: TimeSeries, t: int, K: int) -> np.ndarray:
    if not 1 <= t <= len(ts):
        raise WindowRangeError(f"copy-previous needs 1 <= t <= {len(ts)}, got {t}", bound="history")
    return np.full(K + 1, ts.y[t - 1])


def acf(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelations r_0..r_max_lag (biased, divide by n)."""
    v = np.asarray(series, dtype=np.float64)
    v = v - v.mean()
    denom = v @ v
    if denom == 0:
        raise ConfigurationError("autocorrelation of a constant series is undefined")
    n = v.size
    max_lag = min(max_lag, n - 1)
    return np.array([v[:n - k] @ v[k:] / denom for k in range(max_lag + 1)])


def pacf(series, max_lag: int) -> np.ndarray:
    """Partial autocorrelations phi_00..phi_kk by the Durbin-Levinson recursion."""
    r = acf(series, max_lag)
    max_lag = r.size - 1
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    if max_lag == 0:
        return out
    phi = np.array([r[1]])
    out[1] = r[1]
    v = 1.0 - r[1] ** 2
    for k in range(2, max_lag + 1):
        kk = (r[k] - phi @ r[k - 1:0:-1]) / v
        phi = np.concatenate([phi - kk * phi[::-1], [kk]])
        v *= 1.0 - kk ** 2
        out[k] = kk
    return out


def gaussian_exog(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    return rng.standard_normal((n, m))


def synthesize_sarx(coeffs: SarxCoeffs, spec: SeasonalSpec, noise: NoiseSpec, length: int,
                    exo_generator: Callable | np.ndarray | None = None, n_exog: int = 0, seed=None,
                    series_id: str = "synthetic", burn_in: int | None = None) -> TimeSeries:
    """Simulate the SARX recurrence from zero initial conditions.

    ``exo_generator(rng, n, m)`` supplies exogenous rows (or pass an array of
    shape (burn_in + length, m)). The first ``10 * S`` samples are discarded.
    """
    rng = np.random.default_rng(seed)
    burn = 10 * spec.S if burn_in is None else burn_in
    total = burn + length
    if coeffs.c is not None:
        n_exog = np.asarray(coeffs.c).shape[1]
    if isinstance(exo_generator, np.ndarray):
        x = np.asarray(exo_generator, dtype=np.float64).reshape(total, -1)
    elif n_exog:
        x = (exo_generator or gaussian_exog)(rng, total, n_exog)
    else:
        x = np.zeros((total, 0))
    if coeffs.c is None and x.shape[1]:
        coeffs = SarxCoeffs(coeffs.a, coeffs.b, np.zeros((n_lag_slots(spec) + 1, x.shape[1])), coeffs.intercept)
    coeffs.check(spec, x.shape[1])
    e = noise.sigma * rng.standard_normal(total)
    lags = lag_offsets(spec)
    endo = coeffs.endogenous_vector()
    cx = np.asarray(coeffs.c) if x.shape[1] else None
    y = np.zeros(total)
    for t in range(total):
        valid = lags <= t
        acc = coeffs.intercept + e[t] + endo[valid] @ y[t - lags[valid]]
        if cx is not None:
            acc += cx[0] @ x[t] + np.sum(cx[1:][valid] * x[t - lags[valid]])
        if not np.isfinite(acc) or abs(acc) > 1e9:
            raise InstabilityError(f"simulated process exceeded 1e9 in magnitude at step {t}")
        y[t] = acc
    return TimeSeries(series_id, y[burn:], x[burn:])


def sarx_fit_anchors(ts: TimeSeries, spec: SeasonalSpec, stop: int) -> range:
    """Anchors with full lag history and target index below ``stop``."""
    return range(spec.min_history, min(stop, len(ts)))

