"""Infinite-lattice physics via on-site mean-field decoupling.

Equilibrium: the hopping term is decoupled through the superfluid order
parameter ψ = ⟨a⟩, mapping the lattice onto the local grand-canonical
Hamiltonian

    H(ψ) = H_JC - μ(a†a + σ⁺σ⁻) - zJ(a†ψ + aψ* - |ψ|²),

whose ground energy is minimized over ψ.  The U(1) gauge freedom makes the
energy depend on |ψ| only, so the search runs over real ψ >= 0.  Mott lobes
are the regions with minimizer below ``PSI_FLOOR``; their boundary is located
by bisection in zJ, with the J = 0 lobe edges available in closed form from
the dressed-level staircase.

Driven-dissipative: the same decoupling applied to the local density matrix
gives a closed nonlinear master equation in the drive rotating frame,

    ∂_t ρ = L₀ρ - i[-zJ(ψ(t) a† + ψ(t)* a), ρ],   ψ(t) = tr(aρ),

integrated with ψ refreshed at every right-hand-side evaluation.  Fixed
points are found by following the dynamics (dynamically stable branches only,
which are the observable ones); distinct fixed points reached from different
seeds signal bistability, and persistent oscillations are reported as limit
cycles rather than errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import RK45

from .hilbert import (
    DensityMatrix,
    LatticeSpace,
    Operator,
    SiteSpace,
    annihilation,
    identity,
    number,
    photon_op_on,
    qubit_number,
    site_kron,
)
from .jc import JCParams, jc_hamiltonian, polariton_energy
from .lattice import LatticeParams, build_jchm
from .lindblad import (
    DissipationRates,
    DriveSpec,
    StiffnessError,
    VacuumStateError,
    build_liouvillian,
    g2_zero,
)

__all__ = [
    "GrandCanonicalParams",
    "OrderParameter",
    "PhaseDiagramCell",
    "DrivenFixedPoint",
    "DrivenMFResult",
    "CutoffWindowError",
    "MeanFieldConvergenceError",
    "local_mf_hamiltonian",
    "minimize_order_parameter",
    "mott_window_analytic",
    "mott_window_numeric",
    "lobe_boundary",
    "phase_diagram",
    "driven_mf_steady",
]

PSI_FLOOR = 1e-5          # |ψ*| above this counts as superfluid
PSI_SEARCH_TOL = 1e-7     # golden-section window width
ZJ_RESOLUTION = 1e-4      # lobe-boundary bisection resolution (units of the scan)


class CutoffWindowError(RuntimeError):
    """The energy minimum sits at the edge of the ψ search window."""


class MeanFieldConvergenceError(RuntimeError):
    """The driven self-consistency loop neither settled nor cycled."""


@dataclass(frozen=True)
class GrandCanonicalParams:
    """JC site with chemical potential μ and mean-field hopping weight zJ."""

    jc: JCParams
    mu: float
    z: int = 1
    J: float = 0.0

    def __post_init__(self) -> None:
        if self.z < 1 or int(self.z) != self.z:
            raise ValueError(f"coordination number z must be a positive integer, got {self.z}")
        if self.J < 0:
            raise ValueError("equilibrium scans require J >= 0 (gauge away negative signs)")

    @property
    def zj(self) -> float:
        return self.z * self.J

    def with_zj(self, zj: float) -> "GrandCanonicalParams":
        return GrandCanonicalParams(jc=self.jc, mu=self.mu, z=self.z, J=zj / self.z)


@dataclass(frozen=True)
class OrderParameter:
    psi: float
    energy: float
    n_polariton: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class PhaseDiagramCell:
    mu: float
    zj: float
    psi: float
    energy: float
    n_polariton: float
    phase: str


def local_mf_hamiltonian(p: GrandCanonicalParams, psi: complex, space: SiteSpace) -> Operator:
    """H_JC - μN - zJ(a†ψ + aψ* - |ψ|²) on one site."""
    h = jc_hamiltonian(p.jc, space, rwa=True)
    idq = identity(space.qubit_dim)
    idp = identity(space.photon_cutoff + 1)
    n_tot = site_kron(space, number(space), idq) + site_kron(space, idp, qubit_number())
    a = site_kron(space, annihilation(space), idq)
    m = (h.matrix - p.mu * n_tot.matrix
         - p.zj * (psi * a.dagger().matrix + np.conj(psi) * a.matrix)
         + p.zj * abs(psi) ** 2 * sp.identity(space.dim, format="csr"))
    return Operator(m, hermitian_hint=True)


class _MFCore:
    """Cached dense pieces of H(ψ) so the ψ search costs one eigvalsh per point."""

    def __init__(self, p: GrandCanonicalParams, space: SiteSpace):
        idq = identity(space.qubit_dim)
        idp = identity(space.photon_cutoff + 1)
        self.n_tot = (site_kron(space, number(space), idq)
                      + site_kron(space, idp, qubit_number())).to_dense()
        a = site_kron(space, annihilation(space), idq).to_dense()
        self.h0 = jc_hamiltonian(p.jc, space).to_dense() - p.mu * self.n_tot
        self.a_plus_adag = a + a.conj().T
        self.zj = p.zj
        self.eye = np.eye(space.dim)

    def matrix(self, psi: float) -> np.ndarray:
        return self.h0 - self.zj * psi * self.a_plus_adag + self.zj * psi * psi * self.eye

    def energy(self, psi: float) -> float:
        return float(np.linalg.eigvalsh(self.matrix(psi))[0])

    def ground(self, psi: float) -> tuple[float, np.ndarray]:
        vals, vecs = np.linalg.eigh(self.matrix(psi))
        return float(vals[0]), vecs[:, 0]


def minimize_order_parameter(p: GrandCanonicalParams, space: SiteSpace,
                             psi_max: float = 3.0, grid_points: int = 49,
                             tol: float = PSI_SEARCH_TOL) -> OrderParameter:
    """Minimize the mean-field ground energy over real ψ in [0, psi_max].

    A coarse grid brackets the minimum, golden-section refinement narrows the
    bracket below ``tol``.  A minimum at the upper window edge means the
    search window (or the photon cutoff behind it) is too small and raises
    :class:`CutoffWindowError`.
    """
    core = _MFCore(p, space)
    grid = np.linspace(0.0, psi_max, grid_points)
    energies = [core.energy(s) for s in grid]
    k = int(np.argmin(energies))
    if k == grid_points - 1:
        raise CutoffWindowError(
            f"energy still decreasing at ψ = {psi_max}; enlarge psi_max and the photon cutoff")
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid_points - 1)]

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1 = core.energy(x1)
    f2 = core.energy(x2)
    iterations = grid_points + 2
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = core.energy(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = core.energy(x2)
        iterations += 1
    psi_star = 0.5 * (lo + hi)
    if psi_star > psi_max - 10 * tol:
        raise CutoffWindowError(
            f"minimizer ψ* = {psi_star} sits at the window edge {psi_max}")
    energy, vec = core.ground(psi_star)
    n_val = float(np.real(vec.conj() @ (core.n_tot @ vec)))
    return OrderParameter(psi=float(psi_star), energy=energy, n_polariton=n_val,
                          converged=True, iterations=iterations)


# ---------------------------------------------------------------------------
# Mott lobes

def mott_window_analytic(jc: JCParams, N: int) -> tuple[float, float]:
    """J = 0 chemical-potential window of the N-polariton Mott lobe.

    The lobe occupies ε_N⁻ - ε_{N-1}⁻ < μ < ε_{N+1}⁻ - ε_N⁻ (lower-branch
    staircase); the window closes when its width turns negative.
    """
    if N < 1:
        raise ValueError("Mott lobes are labeled by N >= 1")
    lower = polariton_energy(jc, N, "-") - polariton_energy(jc, N - 1, "-")
    upper = polariton_energy(jc, N + 1, "-") - polariton_energy(jc, N, "-")
    return lower, upper


def mott_window_numeric(jc: JCParams, N: int, space: SiteSpace) -> tuple[float, float]:
    """Same window from numerically diagonalized sector ground energies.

    Independent cross-check of the closed-form staircase: the single-site
    spectrum is diagonalized, eigenstates are binned by their total-excitation
    expectation value and the lowest energy of each bin enters the window.
    """
    if N + 1 > space.photon_cutoff:
        raise ValueError("photon cutoff too small to resolve the N+1 sector")
    h = jc_hamiltonian(jc, space).to_dense()
    idq = identity(space.qubit_dim)
    idp = identity(space.photon_cutoff + 1)
    n_tot = (site_kron(space, number(space), idq) + site_kron(space, idp, qubit_number())).to_dense()
    vals, vecs = np.linalg.eigh(h)
    labels = np.rint(np.real(np.einsum("ij,jk,ki->i", vecs.conj().T, n_tot, vecs))).astype(int)
    e_sector: dict[int, float] = {}
    for lam, lab in zip(vals, labels):
        e_sector.setdefault(int(lab), float(lam))
    lower = e_sector[N] - e_sector[N - 1]
    upper = e_sector[N + 1] - e_sector[N]
    return lower, upper


def lobe_boundary(jc: JCParams, mu: float, space: SiteSpace, z: int = 1,
                  zj_max: float = 1.0, resolution: float = ZJ_RESOLUTION,
                  psi_floor: float = PSI_FLOOR, psi_max: float = 3.0) -> float:
    """Critical zJ at fixed μ where the Mott indicator ψ* > psi_floor flips.

    Bisection over zJ down to ``resolution``; raises ValueError when the
    bracket [resolution, zj_max] does not straddle the boundary (μ outside
    the lobe, or zj_max too small).
    """
    def superfluid(zj: float) -> bool:
        p = GrandCanonicalParams(jc=jc, mu=mu, z=z, J=zj / z)
        return minimize_order_parameter(p, space, psi_max=psi_max).psi > psi_floor

    lo, hi = resolution, zj_max
    if superfluid(lo):
        raise ValueError(f"already superfluid at zJ = {lo}; μ = {mu} lies outside the Mott lobe")
    if not superfluid(hi):
        raise ValueError(f"still Mott at zJ = {hi}; enlarge zj_max")
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if superfluid(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def phase_diagram(jc: JCParams, mu_values: np.ndarray, zj_values: np.ndarray,
                  space: SiteSpace, z: int = 1, psi_floor: float = PSI_FLOOR,
                  psi_max: float = 3.0) -> list[PhaseDiagramCell]:
    """Grid scan of the order parameter; cells are labeled Mott(N) or SF."""
    cells: list[PhaseDiagramCell] = []
    for mu in mu_values:
        for zj in zj_values:
            p = GrandCanonicalParams(jc=jc, mu=float(mu), z=z, J=float(zj) / z)
            res = minimize_order_parameter(p, space, psi_max=psi_max)
            if res.psi <= psi_floor and abs(res.n_polariton - round(res.n_polariton)) <= 1e-6:
                phase = f"Mott{int(round(res.n_polariton))}"
            else:
                phase = "SF"
            cells.append(PhaseDiagramCell(mu=float(mu), zj=float(zj), psi=res.psi,
                                          energy=res.energy, n_polariton=res.n_polariton,
                                          phase=phase))
    return cells


# ---------------------------------------------------------------------------
# driven-dissipative mean field

@dataclass(frozen=True)
class DrivenFixedPoint:
    psi: complex
    rho: DensityMatrix
    g2: float
    seed: complex
    converged: bool
    limit_cycle: bool
    t_elapsed: float
    orbit: tuple[complex, ...] | None = None


@dataclass(frozen=True)
class DrivenMFResult:
    branches: tuple[DrivenFixedPoint, ...]   # one representative per fixed point
    per_seed: tuple[DrivenFixedPoint, ...]
    multistable: bool
    limit_cycle: bool


def _coherent_site_state(space: SiteSpace, alpha: complex) -> DensityMatrix:
    """Truncated coherent state in the photon factor, qubit in the ground state."""
    n = space.photon_cutoff + 1
    amps = np.array([alpha ** k / math.sqrt(math.factorial(k)) for k in range(n)],
                    dtype=np.complex128)
    amps *= math.exp(-0.5 * abs(alpha) ** 2)
    amps /= np.linalg.norm(amps)
    vec = np.zeros(space.dim, dtype=np.complex128)
    for k in range(n):
        vec[space.basis_index(k, 0)] = amps[k]
    return DensityMatrix.pure(vec)


def driven_mf_steady(jc: JCParams, rates: DissipationRates, drive: DriveSpec,
                     zj: float, seeds: tuple[complex, ...] = (0.0,),
                     space: SiteSpace | None = None, psi_tol: float = 1e-8,
                     t_max: float | None = None, control_interval: float | None = None,
                     rtol: float = 1e-9, atol: float = 1e-12,
                     distinct_tol: float = 1e-4) -> DrivenMFResult:
    """Self-consistent driven-dissipative mean field on one site.

    Runs the nonlinear master equation from every seed (a coherent state of
    amplitude equal to the seed value) until the order parameter ψ = tr(aρ)
    changes by less than ``psi_tol`` per control interval.  Fixed points from
    different seeds that differ by more than ``distinct_tol`` are reported as
    distinct branches (multistability).  A non-decaying ψ oscillation is
    classified as a limit cycle and returned with a sampled orbit.
    """
    if not rates.any_nonzero():
        raise ValueError("driven mean field requires dissipative rates > 0")
    if space is None:
        space = SiteSpace(photon_cutoff=10)
    lattice_space = LatticeSpace((space,))
    params = LatticeParams.single_site(jc)
    h0 = build_jchm(params, lattice_space)
    liouv0 = build_liouvillian(h0, rates, drive, lattice_space)

    d = space.dim
    a_mat = photon_op_on(lattice_space, 0, annihilation(space)).matrix
    eye = sp.identity(d, format="csr", dtype=np.complex128)
    s_adag = sp.kron(a_mat.getH(), eye, format="csr") - sp.kron(eye, a_mat.conj(), format="csr")
    s_a = sp.kron(a_mat, eye, format="csr") - sp.kron(eye, a_mat.T, format="csr")
    a_trace = np.asarray(a_mat.T.todense()).reshape(-1)   # tr(aρ) = vec(aᵀ)·vec(ρ)
    l0 = liouv0.matrix

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        psi = a_trace @ y
        return l0 @ y + (1j * zj) * (psi * (s_adag @ y) + np.conj(psi) * (s_a @ y))

    slowest = min(r for r in (rates.gamma1, rates.gamma_phi, rates.gamma_kappa,
                              *rates.kappa_ports.values()) if r > 0)
    t_chunk = control_interval if control_interval is not None else 1.0 / slowest
    horizon = t_max if t_max is not None else 600.0 / slowest

    results: list[DrivenFixedPoint] = []
    for seed in seeds:
        rho = _coherent_site_state(space, seed)
        y = rho.rho.reshape(-1).copy()
        t = 0.0
        psi_prev = complex(a_trace @ y)
        psi_now = psi_prev
        rho_m = rho.rho
        history: list[complex] = [psi_prev]
        converged = False
        cycle = False
        while t < horizon:
            solver = RK45(rhs, 0.0, y, t_chunk, rtol=rtol, atol=atol)
            while solver.status == "running":
                msg = solver.step()
                if solver.status == "failed":
                    raise StiffnessError(f"driven mean-field step failed at t = {t + solver.t:.4g}: {msg}")
            y = solver.y
            rho_m = y.reshape(d, d)
            rho_m = 0.5 * (rho_m + rho_m.conj().T)
            y = rho_m.reshape(-1)
            t += t_chunk
            psi_now = complex(a_trace @ y)
            history.append(psi_now)
            if abs(psi_now - psi_prev) < psi_tol:
                converged = True
                break
            psi_prev = psi_now
        if not converged:
            # limit-cycle test: the ψ samples keep moving but stay bounded and
            # their swing is not shrinking over the last stretch
            tail = np.array(history[-40:])
            swing_late = np.ptp(np.abs(tail[-20:]))
            swing_early = np.ptp(np.abs(tail[:20]))
            if swing_late > 100 * psi_tol and swing_late > 0.5 * swing_early:
                cycle = True
            else:
                raise MeanFieldConvergenceError(
                    f"no fixed point or cycle within horizon {horizon:.3g} "
                    f"(last |Δψ| = {abs(psi_now - psi_prev):.3e})")
        state = DensityMatrix(rho_m)
        try:
            g2 = g2_zero(state, 0, lattice_space)
        except VacuumStateError:
            g2 = float("nan")
        results.append(DrivenFixedPoint(
            psi=complex(a_trace @ y), rho=state, g2=g2, seed=complex(seed),
            converged=converged, limit_cycle=cycle, t_elapsed=t,
            orbit=tuple(history[-40:]) if cycle else None))

    branches: list[DrivenFixedPoint] = []
    for r in results:
        if r.limit_cycle:
            continue
        if all(abs(r.psi - b.psi) > distinct_tol for b in branches):
            branches.append(r)
    any_cycle = any(r.limit_cycle for r in results)
    return DrivenMFResult(branches=tuple(branches), per_seed=tuple(results),
                          multistable=len(branches) > 1, limit_cycle=any_cycle)
