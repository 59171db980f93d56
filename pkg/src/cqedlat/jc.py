"""Single-site Jaynes-Cummings physics: Hamiltonians, polaritons, nonlinearity.

Conventions (ħ = 1, all frequencies angular):

* H = ω_r a†a + ω_q σ⁺σ⁻ + g(a†σ⁻ + aσ⁺), detuning δ = ω_r - ω_q,
* χ_n = sqrt(g²n + δ²/4), dressed energies ε_n± = ω_r n - δ/2 ± χ_n,
  ground state ε_0 = 0,
* mixing angle θ_n = atan2(2g√n, δ + 2χ_n) ∈ [0, π/2], continuous across
  δ sign changes.  With this definition the eigenvectors are
  |n,+⟩ = cos θ_n |n, g⟩ + sin θ_n |n-1, e⟩ and
  |n,−⟩ = sin θ_n |n, g⟩ − cos θ_n |n-1, e⟩, which reduce correctly to the
  photon-like / qubit-like product states in the g → 0 limit on either side
  of resonance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import (
    Operator,
    SiteSpace,
    annihilation,
    identity,
    number,
    qubit_lower,
    qubit_number,
    site_kron,
)

__all__ = [
    "JCParams",
    "PolaritonLevel",
    "Linewidth",
    "jc_hamiltonian",
    "chi",
    "mixing_angle",
    "polariton_energy",
    "polariton_level",
    "dressed_state",
    "hubbard_u",
    "linewidth",
]

BRANCHES = ("+", "-")


@dataclass(frozen=True)
class JCParams:
    """Cavity frequency ω_r, qubit frequency ω_q and coupling g (ħ = 1)."""

    omega_r: float
    omega_q: float
    g: float

    def __post_init__(self) -> None:
        if self.omega_r <= 0 or self.omega_q <= 0:
            raise ValueError("omega_r and omega_q must be positive")
        if self.g < 0:
            raise ValueError("coupling g must be non-negative")

    @property
    def delta(self) -> float:
        """Detuning δ = ω_r - ω_q."""
        return self.omega_r - self.omega_q


@dataclass(frozen=True)
class PolaritonLevel:
    """One dressed level: quantum number n >= 1, branch '+' or '-'."""

    n: int
    branch: str
    energy: float
    theta: float
    chi: float


@dataclass(frozen=True)
class Linewidth:
    """Polariton linewidth on resonance, δε = (γ₁ + 2γ_φ + γ_κ)/2."""

    delta_eps: float


def _check_branch(branch: str) -> float:
    if branch not in BRANCHES:
        raise ValueError(f"branch must be '+' or '-', got {branch!r}")
    return +1.0 if branch == "+" else -1.0


def chi(p: JCParams, n: int) -> float:
    """Half Rabi splitting χ_n = sqrt(g²n + δ²/4)."""
    if n < 1:
        raise ValueError(f"chi is defined for n >= 1, got {n}")
    return math.sqrt(p.g * p.g * n + 0.25 * p.delta * p.delta)


def mixing_angle(p: JCParams, n: int) -> float:
    """θ_n = atan2(2g√n, δ + 2χ_n), in [0, π/2]."""
    return math.atan2(2.0 * p.g * math.sqrt(n), p.delta + 2.0 * chi(p, n))


def polariton_energy(p: JCParams, n: int, branch: str = "-") -> float:
    """Dressed energy ε_n± = ω_r n - δ/2 ± χ_n; ε_0 = 0 for n = 0."""
    if n < 0:
        raise ValueError(f"excitation number must be >= 0, got {n}")
    if n == 0:
        return 0.0
    sign = _check_branch(branch)
    return p.omega_r * n - 0.5 * p.delta + sign * chi(p, n)


def polariton_level(p: JCParams, n: int, branch: str) -> PolaritonLevel:
    _check_branch(branch)
    if n < 1:
        raise ValueError(f"polariton levels start at n = 1, got {n}")
    return PolaritonLevel(n=n, branch=branch, energy=polariton_energy(p, n, branch),
                          theta=mixing_angle(p, n), chi=chi(p, n))


def jc_hamiltonian(p: JCParams, space: SiteSpace, rwa: bool = True) -> Operator:
    """Jaynes-Cummings Hamiltonian on one site.

    With ``rwa=True`` the excitation-conserving form
    ω_r a†a + ω_q σ⁺σ⁻ + g(a†σ⁻ + aσ⁺); with ``rwa=False`` the
    counter-rotating terms g(a†σ⁺ + aσ⁻) are added (Rabi form).
    """
    a = annihilation(space)
    adag = a.dagger()
    idq = identity(space.qubit_dim)
    idp = identity(space.photon_cutoff + 1)
    sm = qubit_lower()
    sp_ = sm.dagger()

    h = (p.omega_r * site_kron(space, number(space), idq)
         + p.omega_q * site_kron(space, idp, qubit_number())
         + p.g * (site_kron(space, adag, sm) + site_kron(space, a, sp_)))
    if not rwa:
        h = h + p.g * (site_kron(space, adag, sp_) + site_kron(space, a, sm))
    return Operator(h.matrix, hermitian_hint=True)


def dressed_state(p: JCParams, n: int, branch: str, space: SiteSpace) -> np.ndarray:
    """Normalized dressed eigenvector |n,±⟩ in the site basis.

    |n,+⟩ = cos θ_n |n, g⟩ + sin θ_n |n-1, e⟩,
    |n,−⟩ = sin θ_n |n, g⟩ − cos θ_n |n-1, e⟩.
    """
    _check_branch(branch)
    if n < 1:
        raise ValueError(f"dressed states are defined for n >= 1, got {n}")
    if n > space.photon_cutoff:
        raise ValueError(f"n = {n} exceeds photon cutoff {space.photon_cutoff}")
    theta = mixing_angle(p, n)
    vec = np.zeros(space.dim, dtype=np.complex128)
    i_ng = space.basis_index(n, 0)
    i_me = space.basis_index(n - 1, 1)
    if branch == "+":
        vec[i_ng] = math.cos(theta)
        vec[i_me] = math.sin(theta)
    else:
        vec[i_ng] = math.sin(theta)
        vec[i_me] = -math.cos(theta)
    return vec


def hubbard_u(p: JCParams, branch: str = "-") -> float:
    """Spectral anharmonicity U = (ε_2± - ε_1±) - (ε_1± - ε_0).

    On resonance (δ = 0, branch '-') this is g(2 - √2).  In the dispersive
    regime the photon-like branch ('+' for δ > 0, '-' for δ < 0) falls off
    as g⁴/δ³.
    """
    _check_branch(branch)
    e0 = 0.0
    e1 = polariton_energy(p, 1, branch)
    e2 = polariton_energy(p, 2, branch)
    return (e2 - e1) - (e1 - e0)


def linewidth(gamma1: float, gamma_phi: float, gamma_kappa: float) -> float:
    """Polariton linewidth δε = (γ₁ + 2γ_φ + γ_κ)/2 on resonance."""
    if gamma1 < 0 or gamma_phi < 0 or gamma_kappa < 0:
        raise ValueError("rates must be non-negative")
    return 0.5 * (gamma1 + 2.0 * gamma_phi + gamma_kappa)
