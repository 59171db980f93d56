"""Netlist parsing and canonical quantization of lumped superconducting circuits.

The pipeline follows the standard three steps: (i) node-flux Lagrangian with
per-element energies

    T_C = (C/2)(φ̇_a - φ̇_b)²,
    V_L = (1/2L)(φ_a - φ_b)²,
    V_JJ = -E_J cos[2π(φ_a - φ_b)/Φ₀],

where the designated closure branch of every externally fluxed loop picks up
the shift (φ_a - φ_b) → (φ_a - φ_b) - Φ_ext; (ii) Legendre transform
H = q†C⁻¹q/2 + V(φ), which requires inverting the full capacitance matrix
(only trivial for one-coordinate circuits); (iii) canonical quantization in a
mixed basis: Cooper-pair charge states for junction-only coordinates,
harmonic-oscillator levels for coordinates touching an inductor (junction
cosines are then built by exponentiating the flux operator).  Offset charges
are fixed at zero.

All quantities are SI: farad, henry, joule, weber.  Spectra come out in
joules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

__all__ = [
    "E_CHARGE",
    "H_PLANCK",
    "HBAR",
    "PHI0",
    "FINE_STRUCTURE",
    "Capacitor",
    "Inductor",
    "Junction",
    "CircuitNetlist",
    "CircuitLagrangian",
    "QuantizedCircuit",
    "NetlistError",
    "SingularCapacitanceError",
    "parse_netlist",
    "serialize_netlist",
    "build_lagrangian",
    "quantize",
    "coupling_estimate",
]

E_CHARGE = 1.602176634e-19          # elementary charge [C]
H_PLANCK = 6.62607015e-34           # Planck constant [J s]
HBAR = H_PLANCK / (2.0 * math.pi)
PHI0 = H_PLANCK / (2.0 * E_CHARGE)  # superconducting flux quantum h/2e [Wb]
FINE_STRUCTURE = 1.0 / 137.035999


class NetlistError(ValueError):
    """Malformed netlist; ``errors`` holds (line_number, message) pairs."""

    def __init__(self, errors: list[tuple[int, str]]):
        self.errors = list(errors)
        super().__init__("; ".join(f"line {ln}: {msg}" for ln, msg in self.errors))


class SingularCapacitanceError(ValueError):
    """Capacitance matrix singular after grounding; carries the null vector."""

    def __init__(self, message: str, null_vector: np.ndarray):
        self.null_vector = null_vector
        super().__init__(message)


@dataclass(frozen=True)
class Capacitor:
    node_a: str
    node_b: str
    farads: float


@dataclass(frozen=True)
class Inductor:
    node_a: str
    node_b: str
    henries: float


@dataclass(frozen=True)
class Junction:
    node_a: str
    node_b: str
    ej_joules: float
    closure_loop: str | None = None


@dataclass(frozen=True)
class CircuitNetlist:
    """Validated node graph with a designated ground and external fluxes."""

    nodes: tuple[str, ...]          # declaration order, ground included
    ground: str
    capacitors: tuple[Capacitor, ...] = ()
    inductors: tuple[Inductor, ...] = ()
    junctions: tuple[Junction, ...] = ()
    fluxes: tuple[tuple[str, float], ...] = ()   # (loop name, Φ_ext in Wb)

    @property
    def free_nodes(self) -> tuple[str, ...]:
        return tuple(n for n in self.nodes if n != self.ground)

    def flux_of(self, loop: str) -> float:
        for name, phi in self.fluxes:
            if name == loop:
                return phi
        raise KeyError(loop)


# ---------------------------------------------------------------------------
# parsing
#
# Line grammar (see docs/netlist_grammar.ebnf):
#   NODE <name>
#   GROUND <name>
#   C  <a> <b> <farads>
#   L  <a> <b> <henries>
#   JJ <a> <b> <EJ_joules> [CLOSURE <loop>]
#   FLUX <loop> <weber>
# '#' starts a comment; tokens are whitespace-separated.

def parse_netlist(text: str) -> CircuitNetlist:
    """Parse and validate a netlist; raises :class:`NetlistError` with all
    offending line numbers on failure."""
    errors: list[tuple[int, str]] = []
    nodes: list[str] = []
    node_lines: dict[str, int] = {}
    ground: str | None = None
    caps: list[Capacitor] = []
    inds: list[Inductor] = []
    jjs: list[tuple[int, Junction]] = []
    fluxes: dict[str, float] = {}
    flux_lines: dict[str, int] = {}

    def declare_node(name: str, ln: int) -> None:
        if name in node_lines:
            errors.append((ln, f"node {name!r} declared twice"))
        else:
            nodes.append(name)
            node_lines[name] = ln

    def number(tokens: list[str], pos: int, ln: int, what: str) -> float | None:
        try:
            v = float(tokens[pos])
        except ValueError:
            errors.append((ln, f"{what} {tokens[pos]!r} is not a number"))
            return None
        return v

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kind = tok[0].upper()
        if kind == "NODE":
            if len(tok) != 2:
                errors.append((ln, "NODE expects exactly one name"))
            else:
                declare_node(tok[1], ln)
        elif kind == "GROUND":
            if len(tok) != 2:
                errors.append((ln, "GROUND expects exactly one name"))
            elif ground is not None:
                errors.append((ln, f"duplicate ground {tok[1]!r} (ground is {ground!r})"))
            else:
                ground = tok[1]
                declare_node(tok[1], ln)
        elif kind in ("C", "L"):
            if len(tok) != 4:
                errors.append((ln, f"{kind} expects: {kind} <a> <b> <value>"))
                continue
            value = number(tok, 3, ln, f"{kind} value")
            if value is None:
                continue
            if value <= 0:
                errors.append((ln, f"{kind} value must be positive, got {value}"))
                continue
            if tok[1] == tok[2]:
                errors.append((ln, f"{kind} element shorts node {tok[1]!r} to itself"))
                continue
            if kind == "C":
                caps.append(Capacitor(tok[1], tok[2], value))
            else:
                inds.append(Inductor(tok[1], tok[2], value))
        elif kind == "JJ":
            if len(tok) not in (4, 6) or (len(tok) == 6 and tok[4].upper() != "CLOSURE"):
                errors.append((ln, "JJ expects: JJ <a> <b> <EJ_joules> [CLOSURE <loop>]"))
                continue
            ej = number(tok, 3, ln, "JJ energy")
            if ej is None:
                continue
            if ej <= 0:
                errors.append((ln, f"JJ energy must be positive, got {ej}"))
                continue
            if tok[1] == tok[2]:
                errors.append((ln, f"JJ shorts node {tok[1]!r} to itself"))
                continue
            loop = tok[5] if len(tok) == 6 else None
            jjs.append((ln, Junction(tok[1], tok[2], ej, loop)))
        elif kind == "FLUX":
            if len(tok) != 3:
                errors.append((ln, "FLUX expects: FLUX <loop> <weber>"))
                continue
            phi = number(tok, 2, ln, "flux value")
            if phi is None:
                continue
            if tok[1] in fluxes:
                errors.append((ln, f"flux loop {tok[1]!r} declared twice"))
                continue
            fluxes[tok[1]] = phi
            flux_lines[tok[1]] = ln
        else:
            errors.append((ln, f"unknown element {tok[0]!r}"))

    # cross-line validation
    declared = set(nodes)
    used: set[str] = set()
    for ln, elem in ([(0, c) for c in caps] + [(0, i) for i in inds]
                     + [(jline, j) for jline, j in jjs]):
        for endpoint in (elem.node_a, elem.node_b):
            if endpoint not in declared:
                errors.append((ln, f"element references undeclared node {endpoint!r}"))
            used.add(endpoint)
    for name, ln in node_lines.items():
        if name not in used:
            errors.append((ln, f"dangling node {name!r}: declared but connected to nothing"))
    if ground is None and not errors:
        errors.append((0, "no GROUND node declared"))

    closures: dict[str, int] = {}
    for jline, j in jjs:
        if j.closure_loop is not None:
            if j.closure_loop not in fluxes:
                errors.append((jline, f"CLOSURE references undeclared loop {j.closure_loop!r}"))
            else:
                closures[j.closure_loop] = closures.get(j.closure_loop, 0) + 1
    for loop, ln in flux_lines.items():
        n = closures.get(loop, 0)
        if n == 0:
            errors.append((ln, f"flux loop {loop!r} has no designated closure branch"))
        elif n > 1:
            errors.append((ln, f"flux loop {loop!r} has {n} closure branches, expected exactly one"))

    if errors:
        raise NetlistError(sorted(errors))
    return CircuitNetlist(nodes=tuple(nodes), ground=ground,
                          capacitors=tuple(caps), inductors=tuple(inds),
                          junctions=tuple(j for _, j in jjs),
                          fluxes=tuple(sorted(fluxes.items())))


def serialize_netlist(netlist: CircuitNetlist) -> str:
    """Canonical text form; parse(serialize(parse(text))) is an identity."""
    lines: list[str] = []
    for n in netlist.nodes:
        lines.append(f"GROUND {n}" if n == netlist.ground else f"NODE {n}")
    for c in netlist.capacitors:
        lines.append(f"C {c.node_a} {c.node_b} {c.farads!r}")
    for l in netlist.inductors:
        lines.append(f"L {l.node_a} {l.node_b} {l.henries!r}")
    for j in netlist.junctions:
        closure = f" CLOSURE {j.closure_loop}" if j.closure_loop else ""
        lines.append(f"JJ {j.node_a} {j.node_b} {j.ej_joules!r}{closure}")
    for loop, phi in netlist.fluxes:
        lines.append(f"FLUX {loop} {phi!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Lagrangian assembly

@dataclass(frozen=True)
class PotentialTerm:
    """One inductive or junction branch in grounded coordinates.

    ``index_a``/``index_b`` are coordinate indices, -1 meaning ground (φ = 0);
    ``shift`` is the closure-branch flux in weber.
    """

    kind: str            # "L" or "JJ"
    index_a: int
    index_b: int
    value: float         # henries for L, E_J joules for JJ
    shift: float = 0.0


@dataclass(frozen=True)
class CircuitLagrangian:
    coordinates: tuple[str, ...]       # free node names, declaration order
    c_matrix: np.ndarray               # grounded capacitance matrix [F]
    potentials: tuple[PotentialTerm, ...]

    @property
    def n_coordinates(self) -> int:
        return len(self.coordinates)


def build_lagrangian(netlist: CircuitNetlist) -> CircuitLagrangian:
    """Stamp the capacitance matrix and collect potential terms.

    Raises :class:`SingularCapacitanceError` when the grounded C matrix has a
    (numerically) zero mode: the circuit then contains a free charge degree of
    freedom and the Legendre transform does not exist.
    """
    free = netlist.free_nodes
    index = {name: k for k, name in enumerate(free)}
    index[netlist.ground] = -1
    n = len(free)
    c = np.zeros((n, n))
    for cap in netlist.capacitors:
        ia, ib = index[cap.node_a], index[cap.node_b]
        if ia >= 0:
            c[ia, ia] += cap.farads
        if ib >= 0:
            c[ib, ib] += cap.farads
        if ia >= 0 and ib >= 0:
            c[ia, ib] -= cap.farads
            c[ib, ia] -= cap.farads

    terms: list[PotentialTerm] = []
    for ind in netlist.inductors:
        terms.append(PotentialTerm(kind="L", index_a=index[ind.node_a],
                                   index_b=index[ind.node_b], value=ind.henries))
    for jj in netlist.junctions:
        shift = netlist.flux_of(jj.closure_loop) if jj.closure_loop else 0.0
        terms.append(PotentialTerm(kind="JJ", index_a=index[jj.node_a],
                                   index_b=index[jj.node_b], value=jj.ej_joules,
                                   shift=shift))

    if n > 0:
        vals, vecs = np.linalg.eigh(c)
        scale = max(abs(vals).max(), 1e-300)
        if vals[0] <= 1e-12 * scale:
            raise SingularCapacitanceError(
                f"capacitance matrix singular after grounding "
                f"(eigenvalue {vals[0]:.3e}); free charge mode "
                f"{np.round(vecs[:, 0], 6)} on coordinates {free}",
                null_vector=vecs[:, 0])
    return CircuitLagrangian(coordinates=free, c_matrix=c, potentials=tuple(terms))


# ---------------------------------------------------------------------------
# quantization

@dataclass(frozen=True)
class CoordinateBasis:
    node: str
    kind: str          # "charge" or "oscillator"
    size: int
    # oscillator parameters (unused for charge basis)
    phi_zpf: float = 0.0


@dataclass
class QuantizedCircuit:
    lagrangian: CircuitLagrangian
    c_inverse: np.ndarray
    bases: tuple[CoordinateBasis, ...]
    hamiltonian: np.ndarray            # dense, joules

    def eigenvalues(self, count: int = 6) -> np.ndarray:
        vals = np.linalg.eigvalsh(self.hamiltonian)
        return vals[:count]

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


def _charge_ops(n_q: int) -> tuple[np.ndarray, np.ndarray]:
    """Charge operator (Cooper pairs × 2e) and e^{iθ} in the ±n_q basis."""
    size = 2 * n_q + 1
    q = 2.0 * E_CHARGE * np.diag(np.arange(-n_q, n_q + 1, dtype=float))
    e_itheta = np.diag(np.ones(size - 1), k=-1)   # e^{iθ}|n⟩ = |n+1⟩
    return q, e_itheta


def _oscillator_ops(phi_zpf: float, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Flux and charge operators in a harmonic basis with the given zero-point
    flux; [φ, q] = iħ."""
    a = np.diag(np.sqrt(np.arange(1, size)), k=1)
    phi = phi_zpf * (a + a.conj().T)
    q_zpf = HBAR / (2.0 * phi_zpf)
    q = 1j * q_zpf * (a.conj().T - a)
    return phi, q


def quantize(lagr: CircuitLagrangian, charge_cutoff: int = 20,
             oscillator_levels: int = 30, max_diag_coordinates: int = 2) -> QuantizedCircuit:
    """Numeric Hamiltonian H = q†C⁻¹q/2 + V(φ) in a per-coordinate basis.

    Coordinates touching an inductor get a harmonic-oscillator basis (the
    junction cosine is then exp(iφ·2π/Φ₀) via a matrix exponential); junction-
    only coordinates get the 2·charge_cutoff+1 Cooper-pair charge basis, where
    the cosine is exact.  Purely capacitive coordinates have a continuous
    spectrum and are rejected.  Diagonalization is limited to
    ``max_diag_coordinates`` coordinates; the matrix grows exponentially
    beyond that and iterative solvers belong upstream.
    """
    n = lagr.n_coordinates
    if n == 0:
        raise ValueError("no free coordinates to quantize")
    if n > max_diag_coordinates:
        raise ValueError(
            f"{n} coordinates exceed the diagonalization limit {max_diag_coordinates}")
    c_inv = np.linalg.inv(lagr.c_matrix)

    touches_l = [False] * n
    touches_jj = [False] * n
    for t in lagr.potentials:
        for idx in (t.index_a, t.index_b):
            if idx >= 0:
                if t.kind == "L":
                    touches_l[idx] = True
                else:
                    touches_jj[idx] = True

    # inductive Hessian diagonal fixes each oscillator's zero-point flux
    hess = np.zeros(n)
    for t in lagr.potentials:
        if t.kind == "L":
            for idx in (t.index_a, t.index_b):
                if idx >= 0:
                    hess[idx] += 1.0 / t.value

    bases: list[CoordinateBasis] = []
    phi_ops: list[np.ndarray | None] = []
    q_ops: list[np.ndarray] = []
    shift_ops: list[np.ndarray | None] = []   # e^{i 2π φ̂ / Φ₀}
    for k, node in enumerate(lagr.coordinates):
        if touches_l[k]:
            l_eff = 1.0 / hess[k]
            c_eff = 1.0 / c_inv[k, k]
            z = math.sqrt(l_eff / c_eff)
            phi_zpf = math.sqrt(HBAR * z / 2.0)
            phi, q = _oscillator_ops(phi_zpf, oscillator_levels)
            bases.append(CoordinateBasis(node=node, kind="oscillator",
                                         size=oscillator_levels, phi_zpf=phi_zpf))
            phi_ops.append(phi)
            q_ops.append(q)
            shift_ops.append(expm(1j * (2.0 * math.pi / PHI0) * phi) if touches_jj[k] else None)
        elif touches_jj[k]:
            q, e_itheta = _charge_ops(charge_cutoff)
            bases.append(CoordinateBasis(node=node, kind="charge", size=2 * charge_cutoff + 1))
            phi_ops.append(None)
            q_ops.append(q)
            shift_ops.append(e_itheta)
        else:
            raise ValueError(
                f"coordinate {node!r} has no inductive or junction potential; "
                "its spectrum is continuous and cannot be diagonalized")

    sizes = [b.size for b in bases]
    dim = int(np.prod(sizes))

    def lift(op: np.ndarray, k: int) -> np.ndarray:
        full = np.array([[1.0 + 0.0j]])
        for j in range(n):
            factor = op if j == k else np.eye(sizes[j], dtype=complex)
            full = np.kron(full, factor)
        return full

    h = np.zeros((dim, dim), dtype=complex)
    for i in range(n):
        h += 0.5 * c_inv[i, i] * lift(q_ops[i] @ q_ops[i], i)
        for j in range(i + 1, n):
            if c_inv[i, j] != 0.0:
                h += c_inv[i, j] * (lift(q_ops[i], i) @ lift(q_ops[j], j))

    for t in lagr.potentials:
        if t.kind == "L":
            dphi = np.zeros((dim, dim), dtype=complex)
            if t.index_a >= 0:
                dphi += lift(phi_ops[t.index_a], t.index_a)
            if t.index_b >= 0:
                dphi -= lift(phi_ops[t.index_b], t.index_b)
            if t.shift:
                dphi -= t.shift * np.eye(dim)
            h += (0.5 / t.value) * (dphi @ dphi)
        else:
            u = np.eye(dim, dtype=complex)
            if t.index_a >= 0:
                u = u @ lift(shift_ops[t.index_a], t.index_a)
            if t.index_b >= 0:
                u = u @ lift(shift_ops[t.index_b], t.index_b).conj().T
            u = u * np.exp(-1j * 2.0 * math.pi * t.shift / PHI0)
            h += -t.value * 0.5 * (u + u.conj().T)

    h = 0.5 * (h + h.conj().T)
    return QuantizedCircuit(lagrangian=lagr, c_inverse=c_inv, bases=tuple(bases),
                            hamiltonian=h)


def coupling_estimate(beta: float, ej: float, ec: float,
                      alpha: float = FINE_STRUCTURE) -> float:
    """Qubit-resonator coupling ratio g/ω_r ≈ 2β (E_J / 2E_C)^{1/4} √α.

    β is the capacitance divider ratio (order unity, supplied by the caller;
    it is not derivable from the netlist quantities used here).
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    if ej <= 0 or ec <= 0 or alpha <= 0:
        raise ValueError("ej, ec and alpha must be positive")
    return 2.0 * beta * (ej / (2.0 * ec)) ** 0.25 * math.sqrt(alpha)
