"""Modulated-energy functionals: the kinetic part against a reference velocity,
relative entropy of the thermalized density against the fluid density, the
Csiszar-Kullback-Pinsker bound, and weak distances between quantum and fluid
observables."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonpositiveReference, NotAProbabilityDensity
from .grid import ComplexField, RealField, h_minus1_norm, integrate, spectral_derivative

# below this the m log m term is numerically 0 (the 0 log 0 = 0 convention)
_VACUUM = 1e-300


@dataclass
class EnergyReport:
    time: float
    kinetic_modulated: float
    field_energy: float
    relative_entropy: float
    total_modulated: float
    conserved_total: float
    boltzmann: float = 0.0

    def as_dict(self) -> dict:
        return {
            "time": self.time,
            "kinetic_modulated": self.kinetic_modulated,
            "field_energy": self.field_energy,
            "relative_entropy": self.relative_entropy,
            "total_modulated": self.total_modulated,
            "conserved_total": self.conserved_total,
            "boltzmann": self.boltzmann,
        }


def _velocity_components(u, dim: int):
    if isinstance(u, RealField):
        u = [u]
    if len(u) != dim:
        raise ValueError(f"velocity needs {dim} components, got {len(u)}")
    return u


def kinetic_modulated(w, u) -> float:
    """(1/2) int sum_j |(i hbar d_j + u_j) psi|^2."""
    psi = w.psi
    comps = _velocity_components(u, psi.grid.dim)
    total = 0.0
    for j, u_j in enumerate(comps):
        shifted = 1j * w.hbar * spectral_derivative(psi, j).values + u_j.values * psi.values
        total += 0.5 * float(np.mean(np.abs(shifted) ** 2))
    return total


def relative_entropy(m: RealField, rho: RealField) -> float:
    """int (m log(m/rho) - m + rho) with the vacuum convention 0 log 0 = 0."""
    if float(np.min(rho.values)) <= 0.0:
        raise NonpositiveReference("reference density must be positive")
    mv = np.asarray(m.values, dtype=float)
    if float(np.min(mv)) < -1e-12:
        raise ValueError("density m must be nonnegative")
    mv = np.maximum(mv, 0.0)
    log_ratio = np.where(mv < _VACUUM, 0.0, np.log(np.maximum(mv, _VACUUM)) - np.log(rho.values))
    return float(np.mean(mv * log_ratio - mv + rho.values))


def ckp_check(m: RealField, rho: RealField) -> dict:
    """L1 distance against the entropy bound sqrt(2 * relative entropy)."""
    for f in (m, rho):
        if abs(integrate(f) - 1.0) > 1e-8:
            raise NotAProbabilityDensity(f"density integrates to {integrate(f)!r}")
    l1 = float(np.mean(np.abs(rho.values - m.values)))
    ent = relative_entropy(m, rho)
    bound = float(np.sqrt(2.0 * max(ent, 0.0)))
    return {
        "l1_distance": l1,
        "entropy": ent,
        "entropy_bound": bound,
        "margin": bound - l1,
        "passed": bool(l1 <= bound + 1e-12),
    }


def field_energy(split) -> float:
    """(eps/2) int |grad V|^2 for the full potential of a split."""
    v = split.potential()
    total = 0.0
    for j in range(v.grid.dim):
        total += float(np.mean(spectral_derivative(v, j).values ** 2))
    return 0.5 * split.eps * total


def modulated_total(w, split, euler) -> EnergyReport:
    """Assemble the modulated energy of a quantum state against a fluid state.

    Caller guarantees split is self-consistent with |psi|^2 and the fluid
    state is at the same time (within half a step).
    """
    from .schrodinger import total_energy

    kin = kinetic_modulated(w, euler.u)
    field = field_energy(split)
    rel = relative_entropy(split.background(), RealField(w.psi.grid, np.exp(euler.log_rho.values)))
    conserved = total_energy(w, split)
    return EnergyReport(
        time=w.time,
        kinetic_modulated=kin,
        field_energy=field,
        relative_entropy=rel,
        total_modulated=kin + field + rel,
        conserved_total=conserved.conserved_total,
        boltzmann=conserved.boltzmann,
    )


def weak_distances(w, euler, test_fields=(), split=None) -> dict:
    """Weak-topology gaps: mean-corrected H^-1 between densities, L1 between
    the thermalized and fluid densities, and current errors |int (J - rho u) b|
    with their 2 ||b||_inf sqrt(K) bounds.

    If split is omitted the potential is re-solved from |psi|^2.
    """
    from .poisson_boltzmann import solve_pb
    from .schrodinger import current, density

    grid = w.psi.grid
    rho_q = density(w)
    rho_fluid = np.exp(euler.log_rho.values)
    diff = rho_q.values - rho_fluid
    diff = diff - diff.mean()
    h_m1 = h_minus1_norm(RealField(grid, diff))

    if split is None:
        split = solve_pb(rho_q, w.eps)
    l1 = float(np.mean(np.abs(split.background().values - rho_fluid)))

    kin = kinetic_modulated(w, euler.u)
    j = current(w)
    currents = []
    for b in test_fields:
        comps = _velocity_components(b, grid.dim)
        val = sum(
            float(np.mean((j[k].values - rho_q.values * euler.u[k].values) * comps[k].values))
            for k in range(grid.dim)
        )
        b_sup = float(np.max(np.sqrt(sum(c.values**2 for c in comps))))
        bound = 2.0 * b_sup * float(np.sqrt(max(kin, 0.0)))
        currents.append({
            "value": val,
            "bound": bound,
            "passed": bool(abs(val) <= bound + 1e-14),
        })
    return {
        "h_minus1_density": h_m1,
        "l1_background": l1,
        "kinetic_modulated": kin,
        "currents": currents,
    }
