import numpy as np
import pytest

from cqedlat.hilbert import LatticeSpace, SiteSpace, annihilation, expectation, photon_op_on
from cqedlat.jc import JCParams
from cqedlat.lattice import LatticeParams, build_jchm
from cqedlat.lindblad import DissipationRates, DriveSpec, build_liouvillian, g2_zero, steady_state
from cqedlat.meanfield import (
    CutoffWindowError,
    GrandCanonicalParams,
    driven_mf_steady,
    lobe_boundary,
    local_mf_hamiltonian,
    minimize_order_parameter,
    mott_window_analytic,
    mott_window_numeric,
    phase_diagram,
)

G, WR = 1.0, 20.0
JC0 = JCParams(WR, WR, G)  # resonant site, energies in units of g


def total_excitation_site(space):
    from cqedlat.hilbert import identity, number, qubit_number, site_kron
    idq = identity(space.qubit_dim)
    idp = identity(space.photon_cutoff + 1)
    return (site_kron(space, number(space), idq) + site_kron(space, idp, qubit_number())).to_dense()


class TestLocalHamiltonian:
    def test_block_diagonal_at_zero_psi(self):
        space = SiteSpace(4)
        p = GrandCanonicalParams(jc=JC0, mu=WR - 0.5, z=1, J=0.1)
        h = local_mf_hamiltonian(p, 0.0, space).to_dense()
        n = total_excitation_site(space)
        assert np.allclose(h @ n - n @ h, 0.0, atol=1e-12)

    def test_psi_independent_at_zero_hopping(self):
        space = SiteSpace(3)
        p = GrandCanonicalParams(jc=JC0, mu=WR - 0.5, z=1, J=0.0)
        h0 = local_mf_hamiltonian(p, 0.0, space).to_dense()
        h1 = local_mf_hamiltonian(p, 0.7, space).to_dense()
        assert np.allclose(h0, h1, atol=1e-14)

    def test_energy_even_in_real_psi(self):
        space = SiteSpace(5)
        p = GrandCanonicalParams(jc=JC0, mu=WR - 0.6, z=1, J=0.08)
        for psi in (0.2, 0.9):
            e_plus = np.linalg.eigvalsh(local_mf_hamiltonian(p, psi, space).to_dense())[0]
            e_minus = np.linalg.eigvalsh(local_mf_hamiltonian(p, -psi, space).to_dense())[0]
            assert e_plus == pytest.approx(e_minus, abs=1e-12)

    def test_gauge_invariance_of_spectrum(self):
        # minimized energy must not depend on the phase of psi
        rng = np.random.default_rng(42)
        space = SiteSpace(5)
        for _ in range(3):
            mu = WR + G * rng.uniform(-0.9, -0.3)
            zj = G * rng.uniform(0.02, 0.3)
            p = GrandCanonicalParams(jc=JC0, mu=mu, z=1, J=zj)
            psi_mag = rng.uniform(0.1, 0.8)
            base = np.linalg.eigvalsh(local_mf_hamiltonian(p, psi_mag, space).to_dense())[0]
            for phi in np.linspace(0, 2 * np.pi, 7):
                h = local_mf_hamiltonian(p, psi_mag * np.exp(1j * phi), space).to_dense()
                assert np.linalg.eigvalsh(h)[0] == pytest.approx(base, abs=1e-11)


class TestMinimization:
    def test_deep_mott_has_zero_order_parameter(self):
        p = GrandCanonicalParams(jc=JC0, mu=WR - 0.7 * G, z=1, J=0.001 * G)
        res = minimize_order_parameter(p, SiteSpace(8))
        assert res.psi < 1e-6
        assert res.n_polariton == pytest.approx(1.0, abs=1e-6)

    def test_superfluid_at_large_hopping(self):
        # energy-comparison oracle: some sampled psi beats psi = 0
        space = SiteSpace(8)
        p = GrandCanonicalParams(jc=JC0, mu=WR - 0.7 * G, z=1, J=0.5 * G)
        e0 = np.linalg.eigvalsh(local_mf_hamiltonian(p, 0.0, space).to_dense())[0]
        sampled = min(np.linalg.eigvalsh(local_mf_hamiltonian(p, s, space).to_dense())[0]
                      for s in np.linspace(0.05, 2.5, 40))
        assert sampled < e0 - 1e-6
        res = minimize_order_parameter(p, space)
        assert res.psi > 0.1
        assert res.energy <= sampled + 1e-9

    def test_vacuum_lobe_below_first_polariton(self):
        p = GrandCanonicalParams(jc=JC0, mu=WR - 1.5 * G, z=1, J=0.001 * G)
        res = minimize_order_parameter(p, SiteSpace(6))
        assert res.psi < 1e-6
        assert res.n_polariton == pytest.approx(0.0, abs=1e-8)

    def test_window_edge_error(self):
        p = GrandCanonicalParams(jc=JC0, mu=WR - 0.7 * G, z=1, J=0.5 * G)
        with pytest.raises(CutoffWindowError):
            minimize_order_parameter(p, SiteSpace(8), psi_max=0.5)


class TestMottWindows:
    def test_analytic_n1_window_on_resonance(self):
        lo, hi = mott_window_analytic(JC0, 1)
        assert (lo - WR) / G == pytest.approx(-1.0, abs=1e-12)
        assert (hi - WR) / G == pytest.approx(-(np.sqrt(2) - 1), abs=1e-12)

    def test_numeric_matches_analytic(self):
        space = SiteSpace(8)
        for n in (1, 2, 3):
            lo_a, hi_a = mott_window_analytic(JC0, n)
            lo_n, hi_n = mott_window_numeric(JC0, n, space)
            assert lo_n == pytest.approx(lo_a, abs=1e-10)
            assert hi_n == pytest.approx(hi_a, abs=1e-10)

    def test_windows_shrink_with_n(self):
        widths = [np.subtract(*reversed(mott_window_analytic(JC0, n))) for n in (1, 2, 3)]
        assert widths[0] > widths[1] > widths[2] > 0

    def test_psi_zero_throughout_analytic_window(self):
        lo, hi = mott_window_analytic(JC0, 1)
        space = SiteSpace(6)
        for mu in np.linspace(lo + 0.02 * G, hi - 0.02 * G, 5):
            p = GrandCanonicalParams(jc=JC0, mu=float(mu), z=1, J=0.002 * G)
            assert minimize_order_parameter(p, space).psi < 1e-5


class TestLobeBoundary:
    def test_boundary_bracket_errors(self):
        space = SiteSpace(6)
        # at the N=1/N=2 degeneracy the lattice is superfluid for any zJ > 0
        from cqedlat.jc import polariton_energy
        mu_deg = polariton_energy(JC0, 2, "-") - polariton_energy(JC0, 1, "-")
        with pytest.raises(ValueError, match="outside the Mott lobe"):
            lobe_boundary(JC0, mu_deg, space, zj_max=0.5)
        with pytest.raises(ValueError, match="enlarge zj_max"):
            lobe_boundary(JC0, WR - 0.7 * G, space, zj_max=0.01)

    def test_boundary_stable_under_cutoff_doubling(self):
        mu = WR - 0.6 * G
        b1 = lobe_boundary(JC0, mu, SiteSpace(6), zj_max=0.4)
        b2 = lobe_boundary(JC0, mu, SiteSpace(12), zj_max=0.4)
        assert abs(b1 - b2) <= 1e-4

    def test_detuning_raises_n1_critical_hopping(self):
        mu0 = WR - 0.6 * G
        b_res = lobe_boundary(JC0, mu0, SiteSpace(6), zj_max=0.6)
        jc_det = JCParams(WR, WR - 0.5 * G, G)  # delta = +0.5 g
        lo, hi = mott_window_analytic(jc_det, 1)
        b_det = lobe_boundary(jc_det, 0.5 * (lo + hi), SiteSpace(6), zj_max=0.8)
        assert b_det > b_res


class TestPhaseDiagram:
    def test_mott_cells_have_integer_filling(self):
        cells = phase_diagram(JC0, np.array([WR - 0.7 * G]),
                              G * np.linspace(0.01, 0.3, 8), SiteSpace(8))
        motts = [c for c in cells if c.phase.startswith("Mott")]
        sfs = [c for c in cells if c.phase == "SF"]
        assert motts and sfs
        for c in motts:
            assert abs(c.n_polariton - round(c.n_polariton)) <= 1e-6
            assert c.psi <= 1e-5


class TestDrivenMeanField:
    def run_point(self, zj, xi=0.01 * G, seeds=(0.0,), **kw):
        de = 0.01 * G
        wq = WR - zj
        rates = DissipationRates(gamma1=de, kappa_ports={0: de})
        drive = DriveSpec(xi=xi, omega_d=wq - G)
        jc = JCParams(WR, wq, G)
        return driven_mf_steady(jc, rates, drive, zj, seeds=seeds,
                                space=SiteSpace(7), **kw)

    def test_zero_hopping_reduces_to_single_site(self):
        de = 0.01 * G
        jc = JCParams(WR, WR, G)
        rates = DissipationRates(gamma1=de, kappa_ports={0: de})
        drive = DriveSpec(xi=0.01 * G, omega_d=WR - G)
        res = driven_mf_steady(jc, rates, drive, 0.0, seeds=(0.0,),
                               space=SiteSpace(7), psi_tol=1e-10)
        space = LatticeSpace.uniform(1, 7)
        h = build_jchm(LatticeParams.single_site(jc), space)
        liouv = build_liouvillian(h, rates, drive, space)
        rho = steady_state(liouv)
        a = photon_op_on(space, 0, annihilation(space.sites[0]))
        assert abs(res.per_seed[0].psi - expectation(a, rho)) < 1e-8
        assert res.per_seed[0].g2 == pytest.approx(g2_zero(rho, 0, space), abs=1e-8)

    def test_weak_hopping_stays_blockaded(self):
        res = self.run_point(0.05 * G)
        assert res.per_seed[0].g2 < 0.5

    def test_strong_hopping_breaks_blockade(self):
        weak = self.run_point(0.1 * G).per_seed[0].g2
        strong = self.run_point(2.0 * G).per_seed[0].g2
        assert strong > 0.5
        assert strong > weak

    def test_bistability_from_seed_dependence(self):
        # pumping above the lower-polariton band bottom develops two stable
        # branches reachable from the empty and the bright seed
        de = 0.01 * G
        zj = 1.0 * G
        wq = WR - zj
        jc = JCParams(WR, wq, G)
        rates = DissipationRates(gamma1=de, kappa_ports={0: de})
        drive = DriveSpec(xi=0.02 * G, omega_d=wq - G + 0.2 * G)
        res = driven_mf_steady(jc, rates, drive, zj, seeds=(0.0, 1.5),
                               space=SiteSpace(7), t_max=250 / de)
        assert res.multistable
        assert len(res.branches) == 2
        psis = sorted(abs(b.psi) for b in res.branches)
        assert psis[1] - psis[0] > 1e-2

    def test_requires_dissipation(self):
        jc = JCParams(WR, WR, G)
        with pytest.raises(ValueError, match="dissipative"):
            driven_mf_steady(jc, DissipationRates(), DriveSpec(xi=0.01, omega_d=WR),
                             0.1, space=SiteSpace(4))
