"""Nonlinear Poisson-Boltzmann solves -eps*Lap(V) = h - exp(V) on the torus.

The potential is produced as the split V = tilde + hat, where tilde carries
the source (linear Poisson solve, or exact Green-kernel sums for particle
data in 1-D) and hat solves the remaining exponential problem
-eps*Lap(hat) = 1 - exp(tilde + hat) by damped Newton with matrix-free
conjugate-gradient linear algebra.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .errors import NewtonDiverged, NotAProbabilityDensity
from .grid import (
    RealField,
    TorusGrid,
    integrate,
    inverse_laplacian_zero_mean,
    l2_norm,
    spectral_derivative,
)

log = logging.getLogger(__name__)

NEWTON_CAP = 100
BACKTRACK_CAP = 30
LIP_SLACK = 0.05
# keep exp() finite when a bad Newton trial wanders far out of the physical range
_EXP_CLIP = 700.0


# ---------------------------------------------------------------------------
# 1-D Green kernel of -d^2/dx^2 on the unit circle (zero-mean gauge + 1/12)
# ---------------------------------------------------------------------------

def wrap_half(x: np.ndarray | float) -> np.ndarray:
    """Wrap to the fundamental domain [-1/2, 1/2)."""
    x = np.asarray(x, dtype=float)
    return x - np.floor(x + 0.5)


def green_kernel(x: np.ndarray | float) -> np.ndarray:
    """K(x) = (x^2 - |x|)/2 on the wrapped representative; K(0) = 0, int K = -1/12."""
    y = wrap_half(x)
    return 0.5 * (y * y - np.abs(y))


def green_kernel_prime(x: np.ndarray | float) -> np.ndarray:
    """K'(x) = x - sign(x)/2 wrapped; odd sawtooth, K'(0) = 0 by convention."""
    y = wrap_half(x)
    return y - 0.5 * np.sign(y)


def green_symbol(grid: TorusGrid) -> np.ndarray:
    """Fourier multiplier of K: 1/|2 pi k|^2 away from k = 0, -1/12 at k = 0."""
    k2 = grid.k_squared()
    safe = np.where(k2 == 0.0, 1.0, k2)
    sym = 1.0 / safe
    sym[(0,) * grid.dim] = -1.0 / 12.0
    return sym


def green_prime_symbol(grid: TorusGrid) -> np.ndarray:
    """Fourier multiplier of K' = i/(2 pi k) for k != 0 (Nyquist zeroed)."""
    if grid.dim != 1:
        raise ValueError("K' symbol is one-dimensional")
    k = grid.wavenumbers(0)
    safe = np.where(k == 0.0, 1.0, k)
    sym = 1j / safe
    sym[k == 0.0] = 0.0
    sym[np.abs(np.fft.fftfreq(grid.n)) == 0.5] = 0.0
    return sym


@dataclass
class ParticleConfig:
    """N point charges on the unit circle; positions stored wrapped to [0, 1)."""

    positions: np.ndarray

    def __post_init__(self) -> None:
        pos = np.atleast_1d(np.asarray(self.positions, dtype=float))
        if pos.ndim != 1 or pos.size < 1:
            raise ValueError("positions must be a nonempty 1-D array")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        self.positions = pos % 1.0

    @property
    def n(self) -> int:
        return self.positions.size


@dataclass
class PotentialSplit:
    """Solution pair (tilde, hat) of the split potential, V = tilde + hat."""

    tilde: RealField
    hat: RealField
    eps: float
    info: dict = field(default_factory=dict)

    def potential(self) -> RealField:
        return RealField(self.tilde.grid, self.tilde.values + self.hat.values)

    def background(self) -> RealField:
        """The thermalized density m = exp(V)."""
        return RealField(self.tilde.grid, np.exp(self.potential().values))


# ---------------------------------------------------------------------------
# damped Newton for the hat equation
# ---------------------------------------------------------------------------

def _newton_hat(
    tilde_vals: np.ndarray,
    eps: float,
    grid: TorusGrid,
    tol: float,
    hat0: np.ndarray | None = None,
) -> tuple[np.ndarray, dict]:
    """Solve -eps*Lap(hat) = 1 - exp(tilde + hat) to residual < tol (L2)."""
    k2 = grid.k_squared()
    shape, size = grid.shape, grid.size

    def boltzmann(v: np.ndarray) -> np.ndarray:
        return np.exp(np.clip(tilde_vals + v, None, _EXP_CLIP))

    def residual(v: np.ndarray) -> np.ndarray:
        lap = np.fft.ifftn(np.fft.fftn(v) * (-k2)).real
        return -eps * lap - 1.0 + boltzmann(v)

    hat = np.zeros(shape) if hat0 is None else np.array(hat0, dtype=float)
    res = residual(hat)
    res_norm = float(np.sqrt(np.mean(res**2)))
    history = [res_norm]
    iterations = 0
    cg_failures = 0

    while res_norm > tol:
        if iterations >= NEWTON_CAP:
            raise NewtonDiverged(
                f"Newton cap {NEWTON_CAP} reached with residual {res_norm:.3e} (tol {tol:.3e})"
            )
        weight = boltzmann(hat)

        def matvec(v: np.ndarray) -> np.ndarray:
            v = v.reshape(shape)
            lap = np.fft.ifftn(np.fft.fftn(v) * (-k2)).real
            return (-eps * lap + weight * v).ravel()

        def precond(v: np.ndarray) -> np.ndarray:
            v = v.reshape(shape)
            return np.fft.ifftn(np.fft.fftn(v) / (eps * k2 + 1.0)).real.ravel()

        op = LinearOperator((size, size), matvec=matvec)
        pre = LinearOperator((size, size), matvec=precond)
        # inexact Newton: forcing term proportional to the residual keeps the
        # quadratic tail observable without over-solving early iterations
        forcing = float(np.clip(res_norm, 1e-8, 1e-2))
        step, cg_info = cg(op, -res.ravel(), M=pre, rtol=forcing, atol=0.0, maxiter=400)
        if cg_info > 0:
            cg_failures += 1
            log.debug("cg hit maxiter at Newton iteration %d", iterations)
        step = step.reshape(shape)

        alpha = 1.0
        accepted = False
        for _ in range(BACKTRACK_CAP + 1):
            trial = hat + alpha * step
            trial_res = residual(trial)
            trial_norm = float(np.sqrt(np.mean(trial_res**2)))
            if trial_norm < res_norm:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            raise NewtonDiverged(
                f"backtracking exhausted at iteration {iterations}, residual {res_norm:.3e}"
            )
        hat, res, res_norm = trial, trial_res, trial_norm
        history.append(res_norm)
        iterations += 1

    info = {
        "iterations": iterations,
        "residuals": history,
        "tolerance": tol,
        "cg_failures": cg_failures,
    }
    return hat, info


def solve_pb(h: RealField, eps: float, *, hat0: np.ndarray | None = None) -> PotentialSplit:
    """Solve -eps*Lap(V) = h - exp(V) for a smooth probability density h."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if float(np.min(h.values)) < 0.0:
        raise NotAProbabilityDensity("density has negative values")
    total = integrate(h)
    if abs(total - 1.0) > 1e-8:
        raise NotAProbabilityDensity(f"density integrates to {total!r}, not 1")
    grid = h.grid
    # project the (at most 1e-8) mass defect so the linear solve is exactly
    # solvable; the second subtraction kills the roundoff left by the division
    rhs_vals = (h.values - h.values.mean()) / eps
    rhs_vals = rhs_vals - rhs_vals.mean()
    tilde = inverse_laplacian_zero_mean(RealField(grid, rhs_vals))
    tol = 1e-10 * (1.0 + l2_norm(h))
    hat_vals, info = _newton_hat(tilde.values, eps, grid, tol, hat0)
    return PotentialSplit(tilde, RealField(grid, hat_vals), eps, info)


def empirical_tilde(x: ParticleConfig, eps: float, grid: TorusGrid) -> np.ndarray:
    """Exact node samples of (1/eps) * [(1/N) sum_i K(y - x_i) + 1/12]."""
    y = grid.axis_points()
    diffs = y[None, :] - x.positions[:, None]
    return (green_kernel(diffs).mean(axis=0) + 1.0 / 12.0) / eps


def empirical_tilde_prime(x: ParticleConfig, eps: float, grid: TorusGrid) -> np.ndarray:
    """Exact node samples of the tilde derivative, (1/(eps*N)) sum_i K'(y - x_i)."""
    y = grid.axis_points()
    diffs = y[None, :] - x.positions[:, None]
    return green_kernel_prime(diffs).mean(axis=0) / eps


def solve_pb_empirical(
    x: ParticleConfig, eps: float, grid: TorusGrid, *, hat0: np.ndarray | None = None
) -> PotentialSplit:
    """Solve -eps*Lap(V) = mu_X - exp(V) in 1-D for an atomic measure mu_X.

    tilde is evaluated analytically at the nodes (true Dirac masses, no
    gridded delta); hat is the usual Newton solve with tilde held fixed.
    """
    if grid.dim != 1:
        raise ValueError("empirical solves are one-dimensional")
    if eps <= 0:
        raise ValueError("eps must be positive")
    tilde_vals = empirical_tilde(x, eps, grid)
    data = RealField(grid, 1.0 - np.exp(np.clip(tilde_vals, None, _EXP_CLIP)))
    tol = 1e-10 * (1.0 + l2_norm(data))
    hat_vals, info = _newton_hat(tilde_vals, eps, grid, tol, hat0)
    return PotentialSplit(RealField(grid, tilde_vals), RealField(grid, hat_vals), eps, info)


# ---------------------------------------------------------------------------
# validators
# ---------------------------------------------------------------------------

def _entry(lhs: float, rhs: float) -> dict:
    return {"lhs": lhs, "rhs": rhs, "margin": rhs - lhs, "passed": bool(lhs <= rhs)}


def lipschitz_hat_prime(split: PotentialSplit) -> float:
    """Lipschitz constant of hat' in 1-D.

    The hat equation gives hat'' = (exp(V) - 1)/eps pointwise, so the sup of
    that expression is the exact Lipschitz constant of hat'.
    """
    if split.tilde.grid.dim != 1:
        raise ValueError("Lipschitz diagnostic is one-dimensional")
    v = split.potential().values
    return float(np.max(np.abs(np.exp(v) - 1.0))) / split.eps


def validate_elliptic_bounds(split: PotentialSplit, source, eps: float | None = None) -> dict:
    """Report margins of the a-priori elliptic bounds for a finished solve.

    source is the data of the solve: a RealField density (smooth case) or a
    ParticleConfig (empirical case). eps defaults to the split's own value.
    Report-only; nothing is raised.
    """
    if eps is None:
        eps = split.eps
    grid = split.tilde.grid
    report: dict = {}
    v = split.potential()
    if isinstance(source, ParticleConfig):
        report["sup_potential"] = _entry(float(np.max(np.abs(v.values))), 1.0 / eps)
    else:
        report["l2_boltzmann"] = _entry(l2_norm(split.background()), l2_norm(source))
    if grid.dim == 1:
        lip = lipschitz_hat_prime(split)
        entry = _entry(lip, 1.0 + LIP_SLACK)
        # cross-estimate from divided differences of the spectral derivative
        hat_p = spectral_derivative(split.hat, 0).values
        entry["finite_difference_estimate"] = float(
            np.max(np.abs(np.diff(np.append(hat_p, hat_p[0])))) * grid.n
        )
        report["lipschitz_hat_prime"] = entry
    report["boltzmann_mass"] = {
        "value": float(integrate(split.background())),
        "passed": bool(abs(integrate(split.background()) - 1.0) <= 1e-8),
    }
    return report


def w1_stability_check(h1, h2, eps: float, grid: TorusGrid | None = None) -> dict:
    """Compare both sides of the measure-stability inequality in 1-D.

    lhs = ||tilde1' - tilde2'||_2 + 4 sqrt(eps) ||hat1' - hat2'||_2,
    rhs = W1(h1, h2)/eps. Inputs can be RealField densities or
    ParticleConfig atoms (grid required for the latter). Report-only.
    """
    from .nbody import w1_circle  # local import; nbody depends on this module

    def solve(h):
        if isinstance(h, ParticleConfig):
            if grid is None:
                raise ValueError("grid required for empirical inputs")
            split = solve_pb_empirical(h, eps, grid)
            tp = empirical_tilde_prime(h, eps, grid)
        else:
            split = solve_pb(h, eps)
            tp = spectral_derivative(split.tilde, 0).values
        return split, tp

    split1, tp1 = solve(h1)
    split2, tp2 = solve(h2)
    g = split1.tilde.grid
    tilde_term = l2_norm(RealField(g, tp1 - tp2))
    hp1 = spectral_derivative(split1.hat, 0).values
    hp2 = spectral_derivative(split2.hat, 0).values
    hat_term = 4.0 * np.sqrt(eps) * l2_norm(RealField(g, hp1 - hp2))
    w1 = w1_circle(h1, h2, grid=g)
    out = _entry(tilde_term + hat_term, w1 / eps)
    out.update({"tilde_term": tilde_term, "hat_term": hat_term, "w1": w1})
    return out
