"""Open-system engine: Lindblad master equation, steady states, blockade observables.

The master equation evolved here is

    ∂_t ρ = -i[H + H_drive, ρ] + γ₁ Σ_n D[σ⁻_n]ρ + γ_φ Σ_n D[σ^z_n]ρ
            + γ_κ Σ_n D[a_n]ρ + Σ_{p ∈ ports} κ_p D[a_p]ρ,

with D[L]ρ = LρL† - (L†Lρ + ρL†L)/2.  Coherent drives are always handled in
the frame rotating at the drive frequency ω_d: every site frequency is shifted
by -ω_d (implemented as H → H - ω_d N with N the total polariton number) and
the drive becomes the static term ξ Σ_m (a_m + a†_m) on the driven sites.
This requires [H, N] = 0, i.e. the rotating-wave form of the lattice
Hamiltonian.

Port loss κ_p and the uniform unwanted loss γ_κ add on port sites; a port is
not exempt from the background channel.

Superoperators use row-major (C-order) vectorization, vec(AρB) = (A ⊗ Bᵀ)vec(ρ).
The sparse superoperator is always assembled; a dense copy is only allowed
below ``dense_threshold`` (default Hilbert dimension 128), which is also the
switch point between the direct null-space steady-state solve and long-time
evolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import RK45
from scipy.optimize import curve_fit

from .hilbert import (
    DensityMatrix,
    LatticeSpace,
    Operator,
    annihilation,
    expectation,
    photon_op_on,
    qubit_op_on,
    qubit_lower,
    sigma_z,
    total_excitation,
)
from .lattice import LatticeParams, build_jchm

__all__ = [
    "DissipationRates",
    "DriveSpec",
    "Liouvillian",
    "EvolveResult",
    "ScanPoint",
    "LorentzianFit",
    "StiffnessError",
    "ConvergenceError",
    "DegenerateSteadyStateError",
    "VacuumStateError",
    "build_liouvillian",
    "evolve",
    "steady_state",
    "g2_zero",
    "transmission_scan",
    "fit_lorentzian",
]

DEFAULT_DENSE_THRESHOLD = 128
TRACE_PRESERVATION_RTOL = 1e-10
STEADY_RESIDUAL_RTOL = 1e-10
STEADY_EVOLVE_TOL = 1e-8
MAX_WORKERS_ENV = "CQEDLAT_WORKERS"  # default process-pool size for scans


class StiffnessError(RuntimeError):
    """Integrator step size underflow; carries time and step diagnostics."""


class ConvergenceError(RuntimeError):
    """A steady-state search did not reach its tolerance within the horizon."""


class DegenerateSteadyStateError(RuntimeError):
    """The Liouvillian null space has more than one dimension."""


class VacuumStateError(ValueError):
    """g²(0) requested on a state with no photons."""


@dataclass(frozen=True)
class DissipationRates:
    """Qubit relaxation γ₁, pure dephasing γ_φ, uniform photon loss γ_κ and
    per-site port rates κ."""

    gamma1: float = 0.0
    gamma_phi: float = 0.0
    gamma_kappa: float = 0.0
    kappa_ports: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.gamma1 < 0 or self.gamma_phi < 0 or self.gamma_kappa < 0:
            raise ValueError("dissipation rates must be non-negative")
        ports = dict(self.kappa_ports)
        for site, kappa in ports.items():
            if kappa < 0:
                raise ValueError(f"port rate on site {site} must be non-negative")
        object.__setattr__(self, "kappa_ports", ports)

    def any_nonzero(self) -> bool:
        return (self.gamma1 > 0 or self.gamma_phi > 0 or self.gamma_kappa > 0
                or any(k > 0 for k in self.kappa_ports.values()))

    def total_photon_loss(self, site: int) -> float:
        """γ_κ plus the port rate; the two channels add on port sites."""
        return self.gamma_kappa + self.kappa_ports.get(site, 0.0)


@dataclass(frozen=True)
class DriveSpec:
    """Coherent drive ξ(a e^{iω_d t} + a† e^{-iω_d t}) on the listed sites."""

    xi: float
    omega_d: float
    driven_sites: tuple[int, ...] = (0,)

    def __post_init__(self) -> None:
        if self.xi < 0:
            raise ValueError("drive amplitude xi must be non-negative")
        object.__setattr__(self, "driven_sites", tuple(self.driven_sites))


class Liouvillian:
    """Sparse superoperator generating the master equation flow."""

    def __init__(self, matrix: sp.spmatrix, space: LatticeSpace, rotating_frame: bool,
                 rates: DissipationRates, drive: DriveSpec | None,
                 dense_threshold: int = DEFAULT_DENSE_THRESHOLD):
        self.matrix = sp.csr_matrix(matrix)
        self.space = space
        self.rotating_frame = rotating_frame
        self.rates = rates
        self.drive = drive
        self.dense_threshold = dense_threshold
        d = space.total_dim
        if self.matrix.shape != (d * d, d * d):
            raise ValueError(f"superoperator shape {self.matrix.shape} does not match dim {d}²")
        defect = self.trace_preservation_defect()
        if defect > TRACE_PRESERVATION_RTOL:
            raise ValueError(f"superoperator does not preserve the trace: defect {defect:.3e}")

    @property
    def dim(self) -> int:
        return self.space.total_dim

    def norm(self) -> float:
        """Max absolute row sum, used to scale residual tolerances."""
        return float(spla.norm(self.matrix, ord=np.inf))

    def trace_preservation_defect(self) -> float:
        """‖vec(I)ᵀ L‖_∞ / ‖L‖_∞; zero for any Lindblad-form generator."""
        d = self.dim
        tr_vec = np.eye(d, dtype=np.complex128).reshape(-1)
        left = self.matrix.T @ tr_vec
        scale = self.norm()
        return float(np.max(np.abs(left)) / max(scale, 1e-300))

    def to_dense(self) -> np.ndarray:
        if self.dim > self.dense_threshold:
            raise ValueError(
                f"dense materialization blocked for dim {self.dim} > threshold {self.dense_threshold}")
        return self.matrix.toarray()

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return (self.matrix @ rho.reshape(-1)).reshape(rho.shape)


def _commutator_super(h: sp.spmatrix) -> sp.csr_matrix:
    d = h.shape[0]
    eye = sp.identity(d, dtype=np.complex128, format="csr")
    return (-1j) * (sp.kron(h, eye, format="csr") - sp.kron(eye, h.T, format="csr"))


def _dissipator_super(L: sp.spmatrix) -> sp.csr_matrix:
    d = L.shape[0]
    eye = sp.identity(d, dtype=np.complex128, format="csr")
    LdL = (L.getH() @ L).tocsr()
    out = sp.kron(L, L.conj(), format="csr")
    out = out - 0.5 * sp.kron(LdL, eye, format="csr")
    out = out - 0.5 * sp.kron(eye, LdL.T, format="csr")
    return out


def collapse_operators(rates: DissipationRates, space: LatticeSpace) -> list[sp.csr_matrix]:
    """√rate-weighted jump operators of the master equation."""
    ops: list[sp.csr_matrix] = []
    for n in range(space.n_sites):
        if rates.gamma1 > 0:
            ops.append(math.sqrt(rates.gamma1) * qubit_op_on(space, n, qubit_lower()).matrix)
        if rates.gamma_phi > 0:
            ops.append(math.sqrt(rates.gamma_phi) * qubit_op_on(space, n, sigma_z()).matrix)
        if rates.gamma_kappa > 0:
            ops.append(math.sqrt(rates.gamma_kappa) * photon_op_on(space, n, annihilation(space.sites[n])).matrix)
    for site, kappa in sorted(rates.kappa_ports.items()):
        if not 0 <= site < space.n_sites:
            raise ValueError(f"port site {site} outside lattice of {space.n_sites} sites")
        if kappa > 0:
            ops.append(math.sqrt(kappa) * photon_op_on(space, site, annihilation(space.sites[site])).matrix)
    return ops


def build_liouvillian(h: Operator, rates: DissipationRates, drive: DriveSpec | None,
                      space: LatticeSpace,
                      dense_threshold: int = DEFAULT_DENSE_THRESHOLD) -> Liouvillian:
    """Assemble the master-equation generator.

    ``h`` is the lab-frame lattice Hamiltonian without the drive.  When a
    drive is given the generator is built in the rotating frame:
    H_rot = H - ω_d N + ξ Σ_m (a_m + a†_m), which presumes [H, N] = 0 (checked).
    """
    d = space.total_dim
    if h.dim != d:
        raise ValueError(f"Hamiltonian dim {h.dim} does not match space dim {d}")
    h_eff = h.matrix
    rotating = False
    if drive is not None:
        n_tot = total_excitation(space).matrix
        comm = h.matrix @ n_tot - n_tot @ h.matrix
        scale = max(abs(h.matrix).max(), 1e-300)
        if comm.nnz and abs(comm).max() > 1e-10 * scale:
            raise ValueError(
                "Hamiltonian does not conserve the total excitation number; "
                "the rotating-frame drive transformation requires the RWA form")
        h_eff = h_eff - drive.omega_d * n_tot
        for m in drive.driven_sites:
            if not 0 <= m < space.n_sites:
                raise ValueError(f"driven site {m} outside lattice of {space.n_sites} sites")
            a_m = photon_op_on(space, m, annihilation(space.sites[m])).matrix
            h_eff = h_eff + drive.xi * (a_m + a_m.getH())
        rotating = True

    gen = _commutator_super(h_eff)
    for c in collapse_operators(rates, space):
        gen = gen + _dissipator_super(c)
    return Liouvillian(gen, space, rotating_frame=rotating, rates=rates, drive=drive,
                       dense_threshold=dense_threshold)


# ---------------------------------------------------------------------------
# time evolution

@dataclass
class EvolveResult:
    times: np.ndarray
    states: list[DensityMatrix]
    n_steps: int
    trace_drift: float
    min_eigenvalue: float

    @property
    def final(self) -> DensityMatrix:
        return self.states[-1]


def _symmetrize(y: np.ndarray, d: int) -> np.ndarray:
    rho = y.reshape(d, d)
    return (0.5 * (rho + rho.conj().T)).reshape(-1)


def evolve(liouv: Liouvillian, rho0: DensityMatrix, t_final: float,
           dt_control: float | None = None, rtol: float = 1e-9,
           atol: float = 1e-12, validate: bool = True) -> EvolveResult:
    """Adaptive Runge-Kutta (Dormand-Prince 4(5)) integration of ∂_t ρ = Lρ.

    The state is re-symmetrized ρ → (ρ + ρ†)/2 after every accepted step;
    outputs are sampled every ``dt_control`` (plus t = 0 and t_final) from the
    dense interpolant.  Trace is never renormalized; the accumulated drift is
    reported in the result and kept below 1e-8 at the default tolerances.

    Raises :class:`StiffnessError` when the step size underflows.
    """
    if rho0.dim != liouv.dim:
        raise ValueError(f"state dim {rho0.dim} does not match Liouvillian dim {liouv.dim}")
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    d = liouv.dim
    mat = liouv.matrix

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        return mat @ y

    if t_final == 0:
        sample_times = np.array([0.0])
    elif dt_control is not None and dt_control > 0:
        n_out = max(1, int(round(t_final / dt_control)))
        sample_times = np.linspace(0.0, t_final, n_out + 1)
    else:
        sample_times = np.array([0.0, t_final])

    y = rho0.rho.reshape(-1).astype(np.complex128)
    samples: list[np.ndarray] = [y.copy()]
    next_sample = 1
    n_steps = 0

    if t_final > 0:
        solver = RK45(rhs, 0.0, y, t_final, rtol=rtol, atol=atol)
        while solver.status == "running":
            message = solver.step()
            if solver.status == "failed":
                raise StiffnessError(
                    f"step size underflow at t = {solver.t:.6g} "
                    f"(h_abs = {solver.h_abs:.3e}, dim = {d}): {message}")
            n_steps += 1
            if next_sample < len(sample_times) and solver.t >= sample_times[next_sample] - 1e-15:
                dense = solver.dense_output()
                while next_sample < len(sample_times) and sample_times[next_sample] <= solver.t + 1e-15:
                    t_s = min(sample_times[next_sample], solver.t)
                    samples.append(_symmetrize(dense(t_s), d))
                    next_sample += 1
            y_sym = _symmetrize(solver.y, d)
            if not np.array_equal(y_sym, solver.y):
                solver.y = y_sym
                solver.f = rhs(solver.t, y_sym)
        while next_sample < len(sample_times):  # guard against float round-off at t_final
            samples.append(_symmetrize(solver.y, d))
            next_sample += 1

    states = [DensityMatrix(v.reshape(d, d), check=validate) for v in samples]
    traces = np.array([np.trace(v.reshape(d, d)) for v in samples])
    drift = float(np.max(np.abs(traces - 1.0)))
    min_eig = states[-1].min_eigenvalue() if validate else float("nan")
    return EvolveResult(times=sample_times, states=states, n_steps=n_steps,
                        trace_drift=drift, min_eigenvalue=min_eig)


# ---------------------------------------------------------------------------
# steady states

def _nullspace_solve(liouv: Liouvillian, replacement_row: np.ndarray,
                     rhs_value: complex) -> np.ndarray:
    """Solve Lx = 0 with one diagonal row replaced by a normalization row.

    Trace preservation makes the diagonal rows of L linearly dependent, so
    replacing the ρ₀₀ row loses no information.
    """
    d = liouv.dim
    m = liouv.matrix.tolil(copy=True)
    m[0, :] = replacement_row
    b = np.zeros(d * d, dtype=np.complex128)
    b[0] = rhs_value
    x = spla.spsolve(m.tocsc(), b)
    if not np.all(np.isfinite(x)):
        raise DegenerateSteadyStateError(
            "normalized null-space solve returned non-finite entries; "
            "the steady space is degenerate or the generator is singular beyond trace freedom")
    return x


def steady_state(liouv: Liouvillian, method: str = "auto",
                 rho0: DensityMatrix | None = None,
                 horizon: float | None = None,
                 chunk: float | None = None,
                 residual_rtol: float = STEADY_RESIDUAL_RTOL,
                 check_unique: bool = True) -> DensityMatrix:
    """Stationary state of a dissipative Liouvillian.

    ``method='nullspace'`` replaces one redundant row of L with the trace
    constraint and solves the sparse linear system; ``method='evolve'``
    integrates from ``rho0`` (vacuum by default) until ‖ρ(t+T) - ρ(t)‖_F
    drops below 1e-8.  ``'auto'`` picks the null-space solve up to the dense
    threshold and evolution beyond it.

    Raises :class:`DegenerateSteadyStateError` when the null space is found to
    be more than one-dimensional (never silently resolved) and
    :class:`ConvergenceError` when evolution does not settle within the horizon.
    """
    if not liouv.rates.any_nonzero():
        raise ValueError("steady_state requires a dissipative Liouvillian (some rate > 0)")
    d = liouv.dim
    if method == "auto":
        method = "nullspace" if d <= liouv.dense_threshold else "evolve"

    if method == "nullspace":
        scale = liouv.norm()
        trace_row = np.eye(d, dtype=np.complex128).reshape(-1) * scale
        x = _nullspace_solve(liouv, trace_row, scale)
        rho = x.reshape(d, d)
        rho = 0.5 * (rho + rho.conj().T)
        rho = rho / np.trace(rho).real
        residual = np.max(np.abs(liouv.matrix @ rho.reshape(-1)))
        if residual > residual_rtol * scale:
            raise ConvergenceError(
                f"null-space steady state residual {residual:.3e} exceeds "
                f"{residual_rtol:.0e} * ‖L‖ = {residual_rtol * scale:.3e}")
        if check_unique:
            rng = np.random.default_rng(7)
            probe_row = (rng.standard_normal(d * d) + 1j * rng.standard_normal(d * d)) * scale / d
            x2 = _nullspace_solve(liouv, probe_row, complex(probe_row @ x))
            rho2 = x2.reshape(d, d)
            rho2 = 0.5 * (rho2 + rho2.conj().T)
            tr2 = np.trace(rho2).real
            if abs(tr2) < 1e-12:
                raise DegenerateSteadyStateError("probe solve returned a traceless null vector")
            rho2 = rho2 / tr2
            if np.linalg.norm(rho - rho2) > 1e-7:
                raise DegenerateSteadyStateError(
                    f"two independent null-space solves disagree by "
                    f"{np.linalg.norm(rho - rho2):.3e}; steady space is degenerate")
        return DensityMatrix(rho)

    if method == "evolve":
        rates = [liouv.rates.gamma1, liouv.rates.gamma_phi, liouv.rates.gamma_kappa,
                 *liouv.rates.kappa_ports.values()]
        slowest = min(r for r in rates if r > 0)
        t_chunk = chunk if chunk is not None else 2.0 / slowest
        t_max = horizon if horizon is not None else 400.0 / slowest
        state = rho0 if rho0 is not None else DensityMatrix.vacuum(liouv.space)
        t = 0.0
        delta = float("inf")
        while t < t_max:
            result = evolve(liouv, state, t_chunk, validate=False)
            new_state = result.final
            delta = np.linalg.norm(new_state.rho - state.rho)
            state = new_state
            t += t_chunk
            if delta < STEADY_EVOLVE_TOL:
                return DensityMatrix(state.rho)
        raise ConvergenceError(
            f"steady state not reached within horizon {t_max:.3g} "
            f"(last change {delta:.3e}, tolerance {STEADY_EVOLVE_TOL:.0e})")

    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# observables

def g2_zero(state: DensityMatrix, site: int, space: LatticeSpace) -> float:
    """Zero-delay second-order coherence g²(0) = ⟨a†a†aa⟩ / ⟨a†a⟩² on one site."""
    a = photon_op_on(space, site, annihilation(space.sites[site]))
    n_op = a.dagger() @ a
    n_val = expectation(n_op, state).real
    if n_val <= 1e-12:
        raise VacuumStateError(
            f"⟨a†a⟩ = {n_val:.3e} on site {site}; g²(0) is undefined on the vacuum")
    num = expectation(a.dagger() @ a.dagger() @ a @ a, state).real
    return float(num / n_val**2)


@dataclass(frozen=True)
class ScanPoint:
    """One steady-state point of a drive-frequency scan."""

    xi: float
    omega_d: float
    a_sum: complex        # Σ_ports ⟨a_p⟩
    abs_a: float          # Σ_ports |⟨a_p⟩|  (heterodyne transmission, arbitrary units)
    t_norm: float         # abs_a normalized to the maximum within the same ξ
    n_photon: float       # Σ_ports ⟨a†a⟩
    g2: float             # g²(0) on the first port site, NaN below the photon floor


def _scan_single(args) -> ScanPoint:
    params, space, rates, xi, omega_d, driven_sites, port_sites = args
    h = build_jchm(params, space)
    liouv = build_liouvillian(h, rates, DriveSpec(xi=xi, omega_d=omega_d,
                                                  driven_sites=driven_sites), space)
    rho = steady_state(liouv, check_unique=False)
    a_sum = 0.0 + 0.0j
    abs_a = 0.0
    n_photon = 0.0
    for s in port_sites:
        a = photon_op_on(space, s, annihilation(space.sites[s]))
        val = expectation(a, rho)
        a_sum += val
        abs_a += abs(val)
        n_photon += expectation(a.dagger() @ a, rho).real
    try:
        g2 = g2_zero(rho, port_sites[0], space)
    except VacuumStateError:
        g2 = float("nan")
    return ScanPoint(xi=xi, omega_d=omega_d, a_sum=a_sum, abs_a=abs_a,
                     t_norm=0.0, n_photon=n_photon, g2=g2)


def transmission_scan(params: LatticeParams, space: LatticeSpace,
                      rates: DissipationRates, drive_amplitudes: Sequence[float],
                      omega_d_grid: Sequence[float],
                      driven_sites: tuple[int, ...] = (0,),
                      max_workers: int = 1) -> list[ScanPoint]:
    """Steady-state transmission T ~ Σ_ports |⟨a⟩| over a (ξ, ω_d) grid.

    Output ports are the sites with a declared port rate; when none are
    declared every site is reported.  Points are independent, so the scan may
    run on a process pool; results keep the deterministic grid order.
    """
    port_sites = tuple(sorted(s for s, k in rates.kappa_ports.items() if k > 0))
    if not port_sites:
        port_sites = tuple(range(space.n_sites))
    jobs = [(params, space, rates, float(xi), float(w), tuple(driven_sites), port_sites)
            for xi in drive_amplitudes for w in omega_d_grid]
    if max_workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            points = list(pool.map(_scan_single, jobs))
    else:
        points = [_scan_single(j) for j in jobs]

    # per-amplitude normalized column
    out: list[ScanPoint] = []
    n_w = len(omega_d_grid)
    for block in range(len(drive_amplitudes)):
        rows = points[block * n_w:(block + 1) * n_w]
        peak = max((r.abs_a for r in rows), default=0.0)
        for r in rows:
            t_norm = r.abs_a / peak if peak > 0 else 0.0
            out.append(ScanPoint(xi=r.xi, omega_d=r.omega_d, a_sum=r.a_sum,
                                 abs_a=r.abs_a, t_norm=t_norm,
                                 n_photon=r.n_photon, g2=r.g2))
    return out


# ---------------------------------------------------------------------------
# lineshape fitting

@dataclass(frozen=True)
class LorentzianFit:
    center: float
    fwhm: float
    height: float
    offset: float


def fit_lorentzian(x: Sequence[float], power: Sequence[float]) -> LorentzianFit:
    """Least-squares Lorentzian fit h·(Γ/2)² / ((x-c)² + (Γ/2)²) + b.

    Fit the *power* lineshape (|⟨a⟩|² for transmission scans); its full width
    at half maximum equals the polariton linewidth δε in linear response.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(power, dtype=float)
    if x.size < 5:
        raise ValueError("need at least 5 points for a lineshape fit")
    b0 = float(np.min(y))
    h0 = float(np.max(y) - b0)
    c0 = float(x[np.argmax(y)])
    above = x[y > b0 + 0.5 * h0]
    w0 = float(above.max() - above.min()) if above.size >= 2 else (x[1] - x[0]) * 3

    def model(w, c, fwhm, h, b):
        hw = 0.5 * fwhm
        return h * hw**2 / ((w - c) ** 2 + hw**2) + b

    popt, _ = curve_fit(model, x, y, p0=[c0, max(w0, 1e-12), h0, b0], maxfev=20000)
    c, fwhm, h, b = popt
    return LorentzianFit(center=float(c), fwhm=float(abs(fwhm)), height=float(h), offset=float(b))
