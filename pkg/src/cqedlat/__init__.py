"""cqedlat: desk-scale simulations of circuit QED lattices.

Subpackages map onto the physics layers: ``hilbert`` (tensor-product operator
algebra), ``jc`` (single-site Jaynes-Cummings), ``lattice`` (JCHM assembly and
sector diagonalization), ``lindblad`` (open-system engine), ``meanfield``
(equilibrium lobes and driven fixed points), ``resonator`` (transmission-line
modes), ``circuits`` (netlist quantization) and ``cli`` (reproducible runs).
"""

__version__ = "0.1.0"

from .hilbert import (  # noqa: F401
    DensityMatrix,
    LatticeSpace,
    Operator,
    SiteSpace,
    cutoff_convergence,
    expectation,
)
from .jc import JCParams, hubbard_u, jc_hamiltonian, linewidth, polariton_energy  # noqa: F401
from .lattice import LatticeParams, build_jchm, chain, sector_basis  # noqa: F401
from .lindblad import (  # noqa: F401
    DissipationRates,
    DriveSpec,
    build_liouvillian,
    evolve,
    g2_zero,
    steady_state,
    transmission_scan,
)
from .meanfield import driven_mf_steady, minimize_order_parameter, phase_diagram  # noqa: F401
from .resonator import ResonatorSpec, hopping_amplitude, port_rate, solve_modes  # noqa: F401
from .circuits import build_lagrangian, coupling_estimate, parse_netlist, quantize  # noqa: F401
