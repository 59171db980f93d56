import math
from pathlib import Path

import numpy as np
import pytest

from cqedlat.circuits import (
    E_CHARGE,
    HBAR,
    PHI0,
    NetlistError,
    SingularCapacitanceError,
    build_lagrangian,
    coupling_estimate,
    parse_netlist,
    quantize,
    serialize_netlist,
)

NETLIST_DIR = Path(__file__).parent / "data" / "netlists"

EC = 0.2e9 * 6.62607015e-34      # 0.2 GHz charging energy in joules
EJ = 50 * EC
C_TRANSMON = E_CHARGE ** 2 / (2 * EC)

LC_TEXT = """GROUND g
NODE n
C g n 1e-12
L g n 1e-9
"""

TRANSMON_TEXT = f"""GROUND g
NODE n
C g n {C_TRANSMON!r}
JJ g n {EJ!r}
"""


class TestParser:
    def test_minimal_lc(self):
        net = parse_netlist(LC_TEXT)
        assert net.free_nodes == ("n",)
        assert len(net.capacitors) == 1
        assert len(net.inductors) == 1

    def test_comments_and_blank_lines(self):
        net = parse_netlist("# header\nGROUND g\n\nNODE n  # island\nC g n 1e-12 # shunt\nL g n 1e-9\n")
        assert net.ground == "g"

    def test_closure_on_undeclared_loop(self):
        with pytest.raises(NetlistError) as err:
            parse_netlist("GROUND g\nNODE n\nC g n 1e-12\nJJ g n 1e-24 CLOSURE nope\n")
        assert any("nope" in msg for _, msg in err.value.errors)
        assert any(ln == 4 for ln, _ in err.value.errors)

    def test_duplicate_ground(self):
        with pytest.raises(NetlistError, match="duplicate ground"):
            parse_netlist("GROUND g\nGROUND h\nNODE n\nC g n 1e-12\nL g n 1e-9\n")

    def test_dangling_node(self):
        with pytest.raises(NetlistError, match="dangling"):
            parse_netlist("GROUND g\nNODE n\nNODE unused\nC g n 1e-12\nL g n 1e-9\n")

    def test_unknown_element(self):
        with pytest.raises(NetlistError, match="unknown element"):
            parse_netlist("GROUND g\nNODE n\nR g n 50\nC g n 1e-12\nL g n 1e-9\n")

    def test_undeclared_endpoint(self):
        with pytest.raises(NetlistError, match="undeclared node"):
            parse_netlist("GROUND g\nNODE n\nC g m 1e-12\nL g n 1e-9\n")

    def test_flux_without_closure(self):
        with pytest.raises(NetlistError, match="no designated closure"):
            parse_netlist("GROUND g\nNODE n\nC g n 1e-12\nJJ g n 1e-24\nFLUX l 1e-15\n")

    def test_two_closures_for_one_loop(self):
        text = ("GROUND g\nNODE n\nC g n 1e-12\n"
                "JJ g n 1e-24 CLOSURE l\nJJ g n 2e-24 CLOSURE l\nFLUX l 1e-15\n")
        with pytest.raises(NetlistError, match="2 closure branches"):
            parse_netlist(text)

    def test_nonpositive_value(self):
        with pytest.raises(NetlistError, match="positive"):
            parse_netlist("GROUND g\nNODE n\nC g n 0\nL g n 1e-9\n")

    def test_error_collection_is_comprehensive(self):
        with pytest.raises(NetlistError) as err:
            parse_netlist("GROUND g\nNODE n\nC g n -1\nRX g n 2\nL g q 1e-9\n")
        assert len(err.value.errors) >= 3

    def test_round_trip_corpus(self):
        corpus = sorted(NETLIST_DIR.glob("*.nl"))
        assert len(corpus) >= 10
        for path in corpus:
            net = parse_netlist(path.read_text())
            assert parse_netlist(serialize_netlist(net)) == net


class TestLagrangian:
    def test_single_capacitor_stamp(self):
        lag = build_lagrangian(parse_netlist(LC_TEXT))
        assert np.allclose(lag.c_matrix, [[1e-12]])

    def test_bridged_pair_stamp(self):
        text = """GROUND g
NODE a
NODE b
C g a 2e-12
C g b 2e-12
C a b 5e-13
L g a 1e-9
L g b 1e-9
"""
        lag = build_lagrangian(parse_netlist(text))
        cs, cb = 2e-12, 5e-13
        assert np.allclose(lag.c_matrix, [[cs + cb, -cb], [-cb, cs + cb]])

    def test_half_quantum_flux_shift(self):
        text = (f"GROUND g\nNODE n\nC g n {C_TRANSMON!r}\nL g n 3e-10\n"
                f"JJ g n {EJ!r} CLOSURE ring\nFLUX ring {0.5 * PHI0!r}\n")
        lag = build_lagrangian(parse_netlist(text))
        jj = [t for t in lag.potentials if t.kind == "JJ"][0]
        # phase shift 2π·Φ_ext/Φ₀ = π
        assert 2 * math.pi * jj.shift / PHI0 == pytest.approx(math.pi, abs=1e-12)

    def test_singular_capacitance_reports_null_vector(self):
        text = ("GROUND g\nNODE a\nNODE b\nC a b 1e-12\n"
                "JJ g a 1e-24\nJJ g b 1e-24\n")
        with pytest.raises(SingularCapacitanceError) as err:
            build_lagrangian(parse_netlist(text))
        v = err.value.null_vector
        assert np.allclose(np.abs(v), [1 / math.sqrt(2)] * 2, atol=1e-9)


class TestQuantize:
    def test_lc_oscillator_levels(self):
        qc = quantize(build_lagrangian(parse_netlist(LC_TEXT)), oscillator_levels=40)
        spacings = np.diff(qc.eigenvalues(10))
        omega = 1 / math.sqrt(1e-9 * 1e-12)
        assert np.all(np.abs(spacings - HBAR * omega) <= 1e-9 * HBAR * omega)

    def test_transmon_against_asymptotic_oracle(self):
        # independent oracle: expanding -E_J cos θ to quartic order around
        # θ = 0 gives E01 ≈ sqrt(8 E_J E_C) - E_C
        qc = quantize(build_lagrangian(parse_netlist(TRANSMON_TEXT)), charge_cutoff=20)
        ev = qc.eigenvalues(3)
        e01 = ev[1] - ev[0]
        oracle = math.sqrt(8 * EJ * EC) - EC
        assert abs(e01 - oracle) / oracle < 0.02

    def test_charge_basis_convergence(self):
        lag = build_lagrangian(parse_netlist(TRANSMON_TEXT))
        e_31 = np.diff(quantize(lag, charge_cutoff=15).eigenvalues(2))[0]
        e_41 = np.diff(quantize(lag, charge_cutoff=20).eigenvalues(2))[0]
        assert abs(e_31 - e_41) / e_41 < 1e-10

    def test_transmon_anharmonicity_trend(self):
        # harmonic limit: E12 - E01 approaches -E_C from below in magnitude
        qc = quantize(build_lagrangian(parse_netlist(TRANSMON_TEXT)))
        ev = qc.eigenvalues(3)
        anharm = (ev[2] - ev[1]) - (ev[1] - ev[0])
        assert anharm < 0
        assert abs(anharm) == pytest.approx(EC, rel=0.25)

    def test_flux_periodicity(self):
        def squid_levels(phi_ext):
            text = (f"GROUND g\nNODE n\nC g n {C_TRANSMON!r}\n"
                    f"JJ g n {EJ!r}\nJJ g n {0.6 * EJ!r} CLOSURE loop\n"
                    f"FLUX loop {phi_ext!r}\n")
            return quantize(build_lagrangian(parse_netlist(text))).eigenvalues(5)

        for frac in (0.0, 0.31):
            base = squid_levels(frac * PHI0)
            shifted = squid_levels((frac + 1.0) * PHI0)
            assert np.max(np.abs(base - shifted)) <= 1e-9 * np.max(np.abs(base))

    def test_two_coordinate_circuit(self):
        path = NETLIST_DIR / "transmon_resonator.nl"
        qc = quantize(build_lagrangian(parse_netlist(path.read_text())),
                      charge_cutoff=8, oscillator_levels=12)
        kinds = sorted(b.kind for b in qc.bases)
        assert kinds == ["charge", "oscillator"]
        ev = qc.eigenvalues(3)
        assert ev[1] > ev[0]

    def test_three_coordinates_rejected_for_diagonalization(self):
        path = NETLIST_DIR / "lc_chain3.nl"
        lag = build_lagrangian(parse_netlist(path.read_text()))
        assert lag.n_coordinates == 3
        with pytest.raises(ValueError, match="diagonalization limit"):
            quantize(lag)

    def test_capacitor_only_coordinate_rejected(self):
        text = "GROUND g\nNODE n\nC g n 1e-12\n"
        with pytest.raises(ValueError, match="continuous"):
            quantize(build_lagrangian(parse_netlist(text)))

    def test_corpus_quantizes(self):
        for path in sorted(NETLIST_DIR.glob("*.nl")):
            lag = build_lagrangian(parse_netlist(path.read_text()))
            if lag.n_coordinates > 2:
                continue
            qc = quantize(lag, charge_cutoff=10, oscillator_levels=15)
            ev = qc.eigenvalues(3)
            assert np.all(np.diff(ev) > 0)


class TestCouplingEstimate:
    def test_reference_value(self):
        # 2·0.5·(50/2)^(1/4)·sqrt(1/137.036) = 5^(1/2)... = 0.1910, by hand
        assert coupling_estimate(0.5, 50.0, 1.0) == pytest.approx(0.191, abs=5e-4)

    def test_quartic_scaling_in_ej(self):
        base = coupling_estimate(0.5, 50.0, 1.0)
        assert coupling_estimate(0.5, 200.0, 1.0) == pytest.approx(math.sqrt(2) * base, rel=1e-12)

    def test_zero_beta(self):
        assert coupling_estimate(0.0, 50.0, 1.0) == 0.0

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            coupling_estimate(0.5, -1.0, 1.0)
