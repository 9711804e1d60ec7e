"""1-D N-particle electrostatics: renormalized energy of an empirical measure
against a background density, coercivity/commutator functionals, circle
Wasserstein-1 distances, and Monte-Carlo statistics for uniform ensembles.

Pair interactions use the periodic Green kernel K directly (O(N^2), exact);
kernel convolutions with grid densities go through the Fourier symbol of K,
i.e. against the trigonometric interpolant of the density.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import RealField, TorusGrid, fourier_coefficients, integrate, l2_norm, spectral_derivative
from .poisson_boltzmann import (
    ParticleConfig,
    green_kernel,
    green_kernel_prime,
    green_prime_symbol,
    green_symbol,
    wrap_half,
)

PAIR_CAP = 4096
W1_SAMPLES = 1 << 16


@dataclass
class RenormalizedEnergy:
    value: float
    n: int
    counterterm: float

    @property
    def augmented(self) -> float:
        """Energy plus the (1 + ||mu||_inf)/N^2 counterterm."""
        return self.value + self.counterterm


def _check_density(mu: RealField, tol: float = 1e-6) -> None:
    if float(np.min(mu.values)) < -1e-12:
        raise ValueError("density must be nonnegative")
    if abs(integrate(mu) - 1.0) > tol:
        raise ValueError(f"density integrates to {integrate(mu)!r}, not 1")


def _mode_numbers(n: int) -> np.ndarray:
    return np.fft.fftfreq(n, d=1.0 / n)


def trig_interp_at(f: RealField, points: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of a grid field at off-grid points."""
    if f.grid.dim != 1:
        raise ValueError("interpolation helper is one-dimensional")
    coeff = fourier_coefficients(f)
    k = _mode_numbers(f.grid.n)
    phases = np.exp(2j * np.pi * np.outer(np.asarray(points, dtype=float), k))
    return (phases @ coeff).real


def kernel_convolution(mu: RealField, points: np.ndarray | None = None,
                       prime: bool = False) -> np.ndarray:
    """(K * mu) (or (K' * mu)) on the grid, or at arbitrary points if given."""
    grid = mu.grid
    sym = green_prime_symbol(grid) if prime else green_symbol(grid)
    coeff = fourier_coefficients(mu) * sym
    if points is None:
        return (np.fft.ifftn(coeff * grid.size)).real
    k = _mode_numbers(grid.n)
    phases = np.exp(2j * np.pi * np.outer(np.asarray(points, dtype=float), k))
    return (phases @ coeff).real


def renormalized_energy(x: ParticleConfig, mu: RealField) -> RenormalizedEnergy:
    """Green-kernel quadratic form of mu_X - mu with the diagonal kept (K(0)=0)."""
    _check_density(mu, tol=1e-8)
    n = x.n
    if n > PAIR_CAP:
        raise ValueError(f"N = {n} exceeds the direct pair-sum cap {PAIR_CAP}")
    diffs = x.positions[:, None] - x.positions[None, :]
    pair = float(green_kernel(diffs).sum()) / n**2
    cross = -2.0 * float(np.mean(kernel_convolution(mu, x.positions)))
    mu_hat = fourier_coefficients(mu)
    self_term = float(np.sum(green_symbol(mu.grid) * np.abs(mu_hat) ** 2).real)
    value = pair + cross + self_term
    counterterm = (1.0 + float(np.max(mu.values))) / n**2
    return RenormalizedEnergy(value=value, n=n, counterterm=counterterm)


def coercivity_check(x: ParticleConfig, mu: RealField, phi: RealField) -> dict:
    """Measure both sides of the weak-coercivity inequality for a test function.

    Constants are existential, so this reports the implied constant at
    exponent lambda = 1/2 instead of a pass/fail verdict.
    """
    energy = renormalized_energy(x, mu)
    lhs = abs(float(np.mean(trig_interp_at(phi, x.positions))) - float(integrate(
        RealField(mu.grid, phi.values * mu.values))))
    grad = spectral_derivative(phi, 0)
    grad_inf = float(np.max(np.abs(grad.values)))
    grad_l2 = l2_norm(grad)
    energy_part = grad_l2 * float(np.sqrt(max(energy.augmented, 0.0)))
    implied_c = float("nan")
    if grad_inf > 0:
        implied_c = max(lhs - energy_part, 0.0) * np.sqrt(x.n) / grad_inf
    return {
        "lhs": lhs,
        "energy_part": energy_part,
        "gradient_sup": grad_inf,
        "implied_constant_half": implied_c,
        "energy": energy,
    }


def commutator_functional(x: ParticleConfig, mu: RealField, u: RealField) -> dict:
    """Off-diagonal double integral of (u(x)-u(y)) K'(x-y) against (mu_X - mu)^2."""
    _check_density(mu, tol=1e-8)
    n = x.n
    if n > PAIR_CAP:
        raise ValueError(f"N = {n} exceeds the direct pair-sum cap {PAIR_CAP}")
    u_at = trig_interp_at(u, x.positions)
    diffs = x.positions[:, None] - x.positions[None, :]
    kprime = green_kernel_prime(diffs)
    np.fill_diagonal(kprime, 0.0)
    pair = float(((u_at[:, None] - u_at[None, :]) * kprime).sum()) / n**2

    conv_mu = kernel_convolution(mu, x.positions, prime=True)
    umu = RealField(mu.grid, u.values * mu.values)
    conv_umu = kernel_convolution(umu, x.positions, prime=True)
    cross = -2.0 * float(np.mean(u_at * conv_mu - conv_umu))

    conv_grid = kernel_convolution(mu, prime=True)
    mumu = 2.0 * float(np.mean(u.values * mu.values * conv_grid))

    value = pair + cross + mumu
    energy = renormalized_energy(x, mu)
    denom = max(energy.augmented, 1e-300)
    return {
        "value": value,
        "pair_term": pair,
        "cross_term": cross,
        "background_term": mumu,
        "energy": energy,
        "ratio": value / denom,
    }


# ---------------------------------------------------------------------------
# circle Wasserstein-1
# ---------------------------------------------------------------------------

def _weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    order = np.argsort(values)
    v, w = values[order], weights[order]
    cum = np.cumsum(w)
    idx = int(np.searchsorted(cum, 0.5 * cum[-1]))
    return float(v[min(idx, v.size - 1)])


def _config_cdf(pos_sorted: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.searchsorted(pos_sorted, t, side="right") / pos_sorted.size


def _density_cdf(mu: RealField, t: np.ndarray) -> np.ndarray:
    """CDF of the periodic piecewise-linear interpolant of mu (exact)."""
    n = mu.grid.n
    vals = mu.values
    ext = np.append(vals, vals[0])
    node_cdf = np.concatenate([[0.0], np.cumsum((ext[:-1] + ext[1:]) / (2.0 * n))])
    j = np.clip((t * n).astype(int), 0, n - 1)
    xi = t - j / n
    slope = (ext[j + 1] - ext[j]) * n
    return node_cdf[j] + ext[j] * xi + 0.5 * slope * xi**2


def w1_circle(mu, nu, grid: TorusGrid | None = None) -> float:
    """W1 on the unit circle, min over c of int |F_mu - F_nu - c|.

    Exact for a pair of particle configurations; when a density is involved,
    the CDF difference is sampled at 2^16 midpoints (absolute error ~1e-5).
    The grid argument is unused and kept for call-site symmetry.
    """
    if isinstance(mu, ParticleConfig) and isinstance(nu, ParticleConfig):
        points = np.concatenate([mu.positions, nu.positions])
        jumps = np.concatenate([
            np.full(mu.n, 1.0 / mu.n), np.full(nu.n, -1.0 / nu.n),
        ])
        order = np.argsort(points, kind="stable")
        p = points[order]
        g = np.cumsum(jumps[order])
        lengths = np.diff(np.append(p, p[0] + 1.0))
        if lengths.sum() <= 0:  # all atoms coincide
            return 0.0
        c = _weighted_median(g, lengths)
        return float(np.sum(lengths * np.abs(g - c)))

    t = (np.arange(W1_SAMPLES) + 0.5) / W1_SAMPLES

    def cdf(m):
        if isinstance(m, ParticleConfig):
            return _config_cdf(np.sort(m.positions), t)
        _check_density(m)
        return _density_cdf(m, t)

    g = cdf(mu) - cdf(nu)
    c = float(np.median(g))
    return float(np.mean(np.abs(g - c)))


# ---------------------------------------------------------------------------
# Monte-Carlo ensembles of uniform configurations
# ---------------------------------------------------------------------------

def mc_uniform_stats(n_particles: int, n_configs: int, rng: np.random.Generator) -> dict:
    """Sample i.i.d. uniform configurations; return renormalized-energy moments
    against the flat background and the mean squared W1 to uniform."""
    if n_particles > PAIR_CAP:
        raise ValueError(f"N = {n_particles} exceeds pair cap {PAIR_CAP}")
    t = (np.arange(W1_SAMPLES) + 0.5) / W1_SAMPLES
    energies = np.empty(n_configs)
    w1s = np.empty(n_configs)
    for i in range(n_configs):
        pos = rng.random(n_particles)
        diffs = pos[:, None] - pos[None, :]
        pair = float(green_kernel(diffs).sum()) / n_particles**2
        # against mu = 1: (K*1)(x) = int K = -1/12 and the self term is -1/12
        energies[i] = pair + 2.0 / 12.0 - 1.0 / 12.0
        g = _config_cdf(np.sort(pos), t) - t
        c = float(np.median(g))
        w1s[i] = np.mean(np.abs(g - c))
    return {
        "n_particles": n_particles,
        "n_configs": n_configs,
        "mean_energy": float(energies.mean()),
        "se_energy": float(energies.std(ddof=1) / np.sqrt(n_configs)),
        "mean_w1": float(w1s.mean()),
        "mean_w1_squared": float((w1s**2).mean()),
    }
