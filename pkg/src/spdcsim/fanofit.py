"""Nonlinear least-squares fitting of the two-resonance interference model.

The model is the interference of two Lorentzian amplitude profiles with a
relative phase,

    I(lam) = t1(lam)^2 + t2(lam)^2 + 2 t1(lam) t2(lam) cos(phi),
    t_j(lam) = A_j (G_j/2)/pi / ((lam - L_j)^2 + (G_j/2)^2),

i.e. the modulus square of the summed complex amplitudes.  Fitting uses a
damped-least-squares trust region (Levenberg-Marquardt with gain-ratio
damping control) on an internal parameterization [log A1, L1, log G1,
log A2, L2, log G2, phi] that keeps amplitudes and widths positive, with a
numerically differentiated Jacobian and a multi-start over the phase.
Centers are deliberately unconstrained: the broad component's center may sit
far outside the data window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FanoParams",
    "FanoFitResult",
    "PARAM_NAMES",
    "evaluate_model",
    "numeric_jacobian",
    "auto_init",
    "fit",
]

PARAM_NAMES = ("a1", "lambda1_nm", "gamma1_nm", "a2", "lambda2_nm", "gamma2_nm", "phi_rad")

# FWHM of the squared Lorentzian profile in units of the amplitude FWHM
_SQ_WIDTH = math.sqrt(math.sqrt(2.0) - 1.0)


@dataclass(frozen=True)
class FanoParams:
    a1: float
    lambda1_nm: float
    gamma1_nm: float
    a2: float
    lambda2_nm: float
    gamma2_nm: float
    phi_rad: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a1, self.lambda1_nm, self.gamma1_nm,
                         self.a2, self.lambda2_nm, self.gamma2_nm, self.phi_rad])


@dataclass
class FanoFitResult:
    a1: float
    lambda1_nm: float
    gamma1_nm: float
    a2: float
    lambda2_nm: float
    gamma2_nm: float
    phi_rad: float
    sigmas: np.ndarray
    residual_norm: float
    converged: bool
    iterations: int
    objective_history: list = field(default_factory=list)

    @property
    def params(self) -> FanoParams:
        return FanoParams(self.a1, self.lambda1_nm, self.gamma1_nm,
                          self.a2, self.lambda2_nm, self.gamma2_nm, self.phi_rad)


def _as_params(params) -> FanoParams:
    if isinstance(params, FanoParams):
        return params
    seq = list(params)
    if len(seq) != 7:
        raise ValueError("expected 7 model parameters")
    return FanoParams(*map(float, seq))


def _profile(lam, a, l0, g):
    hw = 0.5 * g
    return a * (hw / np.pi) / ((lam - l0) ** 2 + hw * hw)


def evaluate_model(params, lambda_nm):
    """Interference intensity of the two-resonance model on a grid.

    Equals the two-channel indistinguishable joint spectral intensity with
    unit projection weights.  Raises ValueError on nonpositive widths,
    negative amplitudes, or nonfinite parameters.
    """
    p = _as_params(params)
    vals = p.as_array()
    if not np.all(np.isfinite(vals)):
        raise ValueError("invalid model parameters: nonfinite value")
    if p.gamma1_nm <= 0 or p.gamma2_nm <= 0:
        raise ValueError("invalid model parameters: widths must be positive")
    if p.a1 < 0 or p.a2 < 0:
        raise ValueError("invalid model parameters: amplitudes must be nonnegative")
    lam = np.asarray(lambda_nm, dtype=float)
    t1 = _profile(lam, p.a1, p.lambda1_nm, p.gamma1_nm)
    t2 = _profile(lam, p.a2, p.lambda2_nm, p.gamma2_nm)
    return t1 * t1 + t2 * t2 + 2.0 * math.cos(p.phi_rad) * t1 * t2


def _model_internal(x, lam):
    t1 = _profile(lam, math.exp(x[0]), x[1], math.exp(x[2]))
    t2 = _profile(lam, math.exp(x[3]), x[4], math.exp(x[5]))
    return t1 * t1 + t2 * t2 + 2.0 * math.cos(x[6]) * t1 * t2


def numeric_jacobian(fun, x, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of a vector function at x."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(fun(x))
    jac = np.empty((f0.size, x.size))
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        jac[:, i] = (np.asarray(fun(xp)) - np.asarray(fun(xm))) / (2.0 * h)
    return jac


def _running_median(values, width):
    width = max(3, width | 1)  # odd
    half = width // 2
    padded = np.pad(values, half, mode="edge")
    return np.array([np.median(padded[i:i + width]) for i in range(values.size)])


def auto_init(spectrum) -> FanoParams:
    """Crude starting parameters estimated from the spectrum itself.

    The narrow component comes from the highest bin and its interpolated
    half-height width; the broad component from the median-filtered pedestal.
    The returned phase is 0 and is replaced by the fitter's multi-start.
    """
    counts = np.asarray(spectrum.counts, dtype=float)
    grid = np.asarray(spectrum.grid_nm, dtype=float)
    if counts.size < 5:
        raise ValueError("spectrum too short")
    if counts.max() == counts.min():
        raise ValueError("flat spectrum")
    step = grid[1] - grid[0]
    pedestal = float(np.median(counts))
    peak_idx = int(np.argmax(counts))
    lam1 = float(grid[peak_idx])
    height1 = counts[peak_idx] - pedestal
    if height1 <= 0:
        raise ValueError("flat spectrum")
    half = pedestal + 0.5 * height1
    left = peak_idx
    while left > 0 and counts[left - 1] >= half:
        left -= 1
    right = peak_idx
    while right < counts.size - 1 and counts[right + 1] >= half:
        right += 1
    width = max((right - left + 1) * step, step)
    gamma1 = width / _SQ_WIDTH
    a1 = math.sqrt(height1) * math.pi * gamma1 / 2.0
    # broad component: strongest part of the smoothed pedestal away from peak
    smooth = _running_median(counts, counts.size // 8)
    away = np.abs(grid - lam1) > 2.0 * width
    if np.any(away):
        j = int(np.argmax(np.where(away, smooth, -np.inf)))
        lam2 = float(grid[j])
        height2 = float(smooth[j])
    else:
        lam2 = float(grid[counts.size // 2])
        height2 = pedestal
    height2 = max(height2, 1e-6 * height1)
    gamma2 = float(grid[-1] - grid[0])
    a2 = math.sqrt(height2) * math.pi * gamma2 / 2.0
    return FanoParams(a1, lam1, gamma1, a2, lam2, gamma2, 0.0)


def _to_internal(p: FanoParams) -> np.ndarray:
    return np.array([math.log(max(p.a1, 1e-300)), p.lambda1_nm, math.log(p.gamma1_nm),
                     math.log(max(p.a2, 1e-300)), p.lambda2_nm, math.log(p.gamma2_nm),
                     p.phi_rad])


def _from_internal(x) -> FanoParams:
    return FanoParams(math.exp(x[0]), float(x[1]), math.exp(x[2]),
                      math.exp(x[3]), float(x[4]), math.exp(x[5]),
                      float(x[6]) % (2.0 * math.pi))


def _lm_minimize(residual, x0, max_iterations, ftol=1e-10, xtol=1e-12):
    """Damped least squares with gain-ratio trust-region control.

    Accepted steps strictly decrease the objective F = 0.5*||r||^2; the
    damping grows geometrically on rejected trials.  Returns the final point,
    objective, convergence flag, iteration count, and the history of accepted
    objective values.
    """
    x = np.asarray(x0, dtype=float)
    r = residual(x)
    f_val = 0.5 * float(r @ r)
    history = [f_val]
    jac = numeric_jacobian(residual, x)
    a = jac.T @ jac
    grad = jac.T @ r
    mu = 1e-3 * max(float(np.max(np.diag(a))), 1e-300)
    nu = 2.0
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        try:
            step = np.linalg.solve(a + mu * np.eye(x.size), -grad)
        except np.linalg.LinAlgError:
            mu *= nu
            nu *= 2.0
            continue
        if np.linalg.norm(step) <= xtol * (1.0 + np.linalg.norm(x)):
            converged = True
            break
        x_new = x + step
        r_new = residual(x_new)
        f_new = 0.5 * float(r_new @ r_new)
        predicted = 0.5 * float(step @ (mu * step - grad))
        rho = (f_val - f_new) / predicted if predicted > 0 else -1.0
        if rho > 0:
            delta = f_val - f_new
            x, r, f_val = x_new, r_new, f_new
            history.append(f_val)
            jac = numeric_jacobian(residual, x)
            a = jac.T @ jac
            grad = jac.T @ r
            mu *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
            nu = 2.0
            if delta <= ftol * max(history[-2], 1e-300):
                converged = True
                break
        else:
            mu *= nu
            nu *= 2.0
    return x, f_val, converged, iterations, history


def fit(spectrum, init="auto", weights=None, max_iterations: int = 500) -> FanoFitResult:
    """Fit the two-resonance interference model to a spectrum.

    Multi-starts over phase in {0, pi/2, pi, 3pi/2} (plus the phase of an
    explicit init) and returns the lowest-residual converged solution, with a
    deterministic tie-break on the start order.  Parameter uncertainties come
    from the residual-variance-scaled inverse normal matrix, transformed to
    the external parameters.

    Args:
        init: "auto" for data-driven starting values, or explicit FanoParams.
        weights: None for unweighted residuals or "poisson" for
            sigma_i = sqrt(max(count_i, 1)).
    """
    counts = np.asarray(spectrum.counts, dtype=float)
    grid = np.asarray(spectrum.grid_nm, dtype=float)
    if np.count_nonzero(counts) < len(PARAM_NAMES):
        raise ValueError("insufficient data: need at least 7 bins with counts")
    if weights is None:
        sigma = np.ones_like(counts)
    elif weights == "poisson":
        sigma = np.sqrt(np.maximum(counts, 1.0))
    else:
        raise ValueError("weights must be None or 'poisson'")

    def residual(x):
        return (_model_internal(x, grid) - counts) / sigma

    base = auto_init(spectrum) if init == "auto" else _as_params(init)
    starts = [0.0, math.pi / 2, math.pi, 3 * math.pi / 2]
    if init != "auto" and base.phi_rad % (2 * math.pi) not in starts:
        starts.insert(0, base.phi_rad % (2 * math.pi))
    x_base = _to_internal(base)
    best = None
    for start_idx, phi0 in enumerate(starts):
        x0 = x_base.copy()
        x0[6] = phi0
        x, f_val, converged, iterations, history = _lm_minimize(
            residual, x0, max_iterations)
        key = (not converged, f_val, start_idx)
        if best is None or key < best[0]:
            best = (key, x, f_val, converged, iterations, history)
    _, x, f_val, converged, iterations, history = best
    params = _from_internal(x)
    jac = numeric_jacobian(residual, x)
    normal = jac.T @ jac
    dof = max(1, counts.size - x.size)
    s2 = 2.0 * f_val / dof
    cov = s2 * np.linalg.pinv(normal)
    sig_internal = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    scale = np.array([params.a1, 1.0, params.gamma1_nm,
                      params.a2, 1.0, params.gamma2_nm, 1.0])
    sigmas = sig_internal * scale
    return FanoFitResult(
        a1=params.a1, lambda1_nm=params.lambda1_nm, gamma1_nm=params.gamma1_nm,
        a2=params.a2, lambda2_nm=params.lambda2_nm, gamma2_nm=params.gamma2_nm,
        phi_rad=params.phi_rad, sigmas=sigmas,
        residual_norm=math.sqrt(2.0 * f_val), converged=converged,
        iterations=iterations, objective_history=history)
