"""Command-line front end: reproducible runs emitting CSV data and JSON summaries.

One subcommand per physics family:

  jc-spectrum         dressed-level table, analytic vs numeric
  blockade-scan       steady-state transmission / g²(0) over a drive grid
  dimer-g2            exact two-site g²(0) versus hopping
  sector-nonlinearity finite-size blockade nonlinearity U(N_s)
  meanfield-lobes     grand-canonical phase-diagram grid
  driven-mf           driven-dissipative mean-field fixed points
  modes               transmission-line resonator mode table
  quantize            netlist quantization spectrum

Configuration comes from a JSON file (--config) and/or per-key flags; flags
override the file.  Every run writes a CSV table plus a JSON summary holding
the fully resolved configuration, library versions and convergence flags; the
summary validates against the schema shipped in ``cqedlat/schemas``.  Runs are
deterministic: identical configs produce byte-identical CSV at workers = 1
(and scan points are order-stable under parallelism).

Exit codes: 0 success, 1 input error, 2 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass
from importlib import metadata, resources
from typing import Any, Callable

import numpy as np

from . import __version__
from .circuits import NetlistError, build_lagrangian, parse_netlist, quantize
from .hilbert import LatticeSpace, SiteSpace, cutoff_convergence
from .jc import JCParams, jc_hamiltonian, mixing_angle, polariton_energy, chi as chi_n
from .lattice import (
    LatticeParams,
    band_resonant_chain,
    measured_nonlinearity,
    nonlinearity_closed_form,
    photon_band_minimum,
)
from .lindblad import (
    ConvergenceError,
    DissipationRates,
    DriveSpec,
    MAX_WORKERS_ENV,
    StiffnessError,
    g2_zero,
    steady_state,
    build_liouvillian,
    transmission_scan,
)
from .meanfield import (
    MeanFieldConvergenceError,
    driven_mf_steady,
    mott_window_analytic,
    phase_diagram,
)
from .resonator import ResonatorSpec, solve_modes

__all__ = ["main", "run_command", "load_config", "ConfigError"]

REQUIRED = object()


class ConfigError(ValueError):
    """Invalid run configuration; ``errors`` holds (key, message) pairs."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{k}: {m}" for k, m in errors))


@dataclass(frozen=True)
class Field:
    kind: str                  # float | nonneg | pos | int | posint | str | bool | floats | seeds
    default: Any
    help: str


# per-command configuration schemas; every key doubles as a CLI flag
SCHEMAS: dict[str, dict[str, Field]] = {
    "jc-spectrum": {
        "omega_r": Field("pos", REQUIRED, "cavity frequency (rad/time, hbar=1)"),
        "omega_q": Field("pos", REQUIRED, "qubit frequency"),
        "g": Field("nonneg", REQUIRED, "qubit-photon coupling"),
        "n_max": Field("posint", 6, "photon cutoff"),
        "rwa": Field("bool", True, "rotating-wave form"),
    },
    "blockade-scan": {
        "omega_r": Field("pos", REQUIRED, "cavity frequency"),
        "omega_q": Field("pos", REQUIRED, "qubit frequency"),
        "g": Field("nonneg", REQUIRED, "coupling"),
        "gamma1": Field("nonneg", 0.0, "qubit relaxation rate"),
        "gamma_phi": Field("nonneg", 0.0, "pure dephasing rate"),
        "gamma_kappa": Field("nonneg", 0.0, "uniform photon loss rate"),
        "kappa": Field("nonneg", 0.0, "output-port rate on site 0"),
        "drive_amplitudes": Field("floats", REQUIRED, "drive strengths xi"),
        "omega_d_min": Field("float", REQUIRED, "scan start"),
        "omega_d_max": Field("float", REQUIRED, "scan end"),
        "omega_d_points": Field("posint", 51, "scan points"),
        "n_max": Field("posint", 6, "photon cutoff"),
        "cutoff_check": Field("bool", True, "repeat one point at n_max+2"),
        "workers": Field("posint", 0, "process pool size (0: env or 1)"),
    },
    "dimer-g2": {
        "omega_r": Field("pos", REQUIRED, "cavity frequency"),
        "g": Field("nonneg", REQUIRED, "coupling"),
        "j_values": Field("floats", REQUIRED, "hopping amplitudes to scan"),
        "xi": Field("nonneg", REQUIRED, "drive strength (both sites)"),
        "gamma1": Field("nonneg", 0.0, "qubit relaxation rate"),
        "gamma_phi": Field("nonneg", 0.0, "pure dephasing rate"),
        "gamma_kappa": Field("nonneg", 0.0, "uniform photon loss rate"),
        "drive_offset": Field("float", 0.0, "drive detuning from the lower-polariton band bottom"),
        "n_max": Field("posint", 3, "photon cutoff"),
        "cutoff_check": Field("bool", True, "repeat one point at n_max+2"),
    },
    "sector-nonlinearity": {
        "omega_r": Field("pos", REQUIRED, "cavity frequency"),
        "g": Field("nonneg", REQUIRED, "coupling"),
        "J": Field("float", REQUIRED, "hopping amplitude (sign included)"),
        "n_sites_list": Field("floats", REQUIRED, "chain sizes"),
        "n_max": Field("posint", 4, "photon cutoff"),
        "cutoff_check": Field("bool", True, "repeat largest chain at n_max+2"),
    },
    "meanfield-lobes": {
        "omega_r": Field("pos", REQUIRED, "cavity frequency"),
        "omega_q": Field("pos", REQUIRED, "qubit frequency"),
        "g": Field("nonneg", REQUIRED, "coupling"),
        "z": Field("posint", 1, "coordination number"),
        "mu_min": Field("float", REQUIRED, "chemical potential scan start"),
        "mu_max": Field("float", REQUIRED, "chemical potential scan end"),
        "mu_points": Field("posint", 40, "grid points in mu"),
        "zj_min": Field("nonneg", REQUIRED, "zJ scan start"),
        "zj_max": Field("pos", REQUIRED, "zJ scan end"),
        "zj_points": Field("posint", 40, "grid points in zJ"),
        "n_max": Field("posint", 10, "photon cutoff"),
        "psi_max": Field("pos", 3.0, "order-parameter search window"),
        "cutoff_check": Field("bool", True, "repeat one cell at n_max+2"),
    },
    "driven-mf": {
        "omega_r": Field("pos", REQUIRED, "cavity frequency"),
        "g": Field("nonneg", REQUIRED, "coupling"),
        "zj_values": Field("floats", REQUIRED, "mean-field hopping weights zJ"),
        "xi": Field("nonneg", REQUIRED, "drive strength"),
        "gamma1": Field("nonneg", 0.0, "qubit relaxation rate"),
        "gamma_phi": Field("nonneg", 0.0, "pure dephasing rate"),
        "gamma_kappa": Field("nonneg", 0.0, "uniform photon loss rate"),
        "kappa": Field("nonneg", 0.0, "output-port rate"),
        "drive_offset": Field("float", 0.0, "drive detuning from the lower-polariton band bottom"),
        "seeds": Field("seeds", [0.0], "initial order-parameter seeds (re or [re, im])"),
        "n_max": Field("posint", 7, "photon cutoff"),
        "psi_tol": Field("pos", 1e-8, "fixed-point tolerance"),
    },
    "modes": {
        "ell": Field("pos", REQUIRED, "inductance per unit length [H/m]"),
        "c": Field("pos", REQUIRED, "capacitance per unit length [F/m]"),
        "L_x": Field("pos", REQUIRED, "resonator length [m]"),
        "C_minus": Field("nonneg", 0.0, "left end capacitance [F]"),
        "C_plus": Field("nonneg", 0.0, "right end capacitance [F]"),
        "count": Field("posint", 5, "number of modes"),
        "samples": Field("posint", 0, "mode-function sample points (0: ends only)"),
    },
    "quantize": {
        "netlist": Field("str", REQUIRED, "netlist file path"),
        "charge_cutoff": Field("posint", 20, "charge basis cutoff +-N"),
        "oscillator_levels": Field("posint", 30, "oscillator basis size"),
        "levels": Field("posint", 6, "number of eigenvalues to emit"),
        "cutoff_check": Field("bool", True, "repeat with enlarged bases"),
    },
}


def _coerce(key: str, field: Field, value: Any, errors: list[tuple[str, str]]) -> Any:
    kind = field.kind
    try:
        if kind == "bool":
            if isinstance(value, bool):
                return value
            if isinstance(value, str):
                if value.lower() in ("true", "1", "yes"):
                    return True
                if value.lower() in ("false", "0", "no"):
                    return False
            raise ValueError(f"expected a boolean, got {value!r}")
        if kind == "str":
            if not isinstance(value, str):
                raise ValueError(f"expected a string, got {value!r}")
            return value
        if kind in ("int", "posint"):
            iv = int(value)
            if iv != float(value):
                raise ValueError(f"expected an integer, got {value!r}")
            if kind == "posint" and iv < 1:
                raise ValueError(f"must be >= 1, got {iv}")
            return iv
        if kind in ("float", "nonneg", "pos"):
            fv = float(value)
            if kind == "nonneg" and fv < 0:
                raise ValueError(f"must be >= 0, got {fv}")
            if kind == "pos" and fv <= 0:
                raise ValueError(f"must be > 0, got {fv}")
            return fv
        if kind == "floats":
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            if not isinstance(value, (list, tuple)) or not value:
                raise ValueError(f"expected a non-empty list of numbers, got {value!r}")
            return [float(v) for v in value]
        if kind == "seeds":
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            if not isinstance(value, (list, tuple)) or not value:
                raise ValueError(f"expected a non-empty list of seeds, got {value!r}")
            out = []
            for v in value:
                if isinstance(v, (list, tuple)) and len(v) == 2:
                    out.append(complex(float(v[0]), float(v[1])))
                else:
                    out.append(complex(float(v), 0.0))
            return out
        raise AssertionError(f"unknown field kind {kind}")
    except (TypeError, ValueError) as exc:
        errors.append((key, str(exc)))
        return None


def load_config(command: str, config_path: str | None,
                overrides: dict[str, Any]) -> dict[str, Any]:
    """Merge config file and flag overrides against the command schema.

    Raises :class:`ConfigError` listing every unknown key, type mismatch and
    missing required key by its key path.
    """
    schema = SCHEMAS[command]
    errors: list[tuple[str, str]] = []
    raw: dict[str, Any] = {}
    if config_path is not None:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except FileNotFoundError:
            raise ConfigError([("config", f"file not found: {config_path}")])
        except json.JSONDecodeError as exc:
            raise ConfigError([("config", f"invalid JSON: {exc}")])
        if not isinstance(loaded, dict):
            raise ConfigError([("config", "top level must be a JSON object")])
        raw.update(loaded)
    for k, v in overrides.items():
        if v is not None:
            raw[k] = v

    for key in raw:
        if key not in schema:
            errors.append((key, "unknown key"))
    config: dict[str, Any] = {}
    for key, field in schema.items():
        if key in raw:
            val = _coerce(key, field, raw[key], errors)
            if val is not None:
                config[key] = val
        elif field.default is REQUIRED:
            errors.append((key, "missing required key"))
        else:
            config[key] = field.default
    if errors:
        raise ConfigError(sorted(errors))
    return config


# ---------------------------------------------------------------------------
# command implementations; each returns (csv_header, csv_rows, convergence_dict)

def _rates_from(config: dict[str, Any], port_site: int | None = 0) -> DissipationRates:
    ports = {}
    if port_site is not None and config.get("kappa", 0.0) > 0:
        ports[port_site] = config["kappa"]
    return DissipationRates(gamma1=config["gamma1"], gamma_phi=config["gamma_phi"],
                            gamma_kappa=config["gamma_kappa"], kappa_ports=ports)


def _cmd_jc_spectrum(config: dict[str, Any]):
    p = JCParams(config["omega_r"], config["omega_q"], config["g"])
    space = SiteSpace(config["n_max"])
    h = jc_hamiltonian(p, space, rwa=config["rwa"])
    numeric = np.linalg.eigvalsh(h.to_dense())
    rows = []
    max_err = 0.0
    rows.append({"n": 0, "branch": "0", "energy": 0.0, "chi": 0.0, "theta": 0.0,
                 "energy_numeric": float(numeric[np.argmin(np.abs(numeric))]),
                 "abs_err": float(np.min(np.abs(numeric)))})
    for n in range(1, config["n_max"] + 1):
        for branch in ("-", "+"):
            e = polariton_energy(p, n, branch)
            k = int(np.argmin(np.abs(numeric - e)))
            err = abs(float(numeric[k]) - e) if config["rwa"] and n <= config["n_max"] else float("nan")
            if config["rwa"] and n < config["n_max"]:
                max_err = max(max_err, err)
            rows.append({"n": n, "branch": branch, "energy": e, "chi": chi_n(p, n),
                         "theta": mixing_angle(p, n), "energy_numeric": float(numeric[k]),
                         "abs_err": err})
    conv = {"max_abs_err_below_cutoff": max_err, "analytic_matches_numeric": max_err < 1e-10}
    header = ["n", "branch", "energy", "chi", "theta", "energy_numeric", "abs_err"]
    return header, rows, conv


def _cmd_blockade_scan(config: dict[str, Any]):
    p = JCParams(config["omega_r"], config["omega_q"], config["g"])
    params = LatticeParams.single_site(p)
    rates = _rates_from(config)
    if not rates.any_nonzero():
        raise ConfigError([("gamma_kappa", "at least one dissipation rate must be positive")])
    space = LatticeSpace.uniform(1, config["n_max"])
    grid = np.linspace(config["omega_d_min"], config["omega_d_max"], config["omega_d_points"])
    workers = config["workers"] or int(os.environ.get(MAX_WORKERS_ENV, "1"))
    points = transmission_scan(params, space, rates, config["drive_amplitudes"],
                               grid, max_workers=workers)
    rows = [{"xi": q.xi, "omega_d": q.omega_d, "re_a": q.a_sum.real, "im_a": q.a_sum.imag,
             "abs_a": q.abs_a, "t_norm": q.t_norm, "n_photon": q.n_photon, "g2": q.g2}
            for q in points]
    conv = {"steady_state_method": "nullspace", "points": len(rows)}
    if config["cutoff_check"]:
        mid = grid[len(grid) // 2]
        xi0 = config["drive_amplitudes"][0]

        def observable(n_max: int) -> complex:
            sp_ = LatticeSpace.uniform(1, n_max)
            pt = transmission_scan(params, sp_, rates, [xi0], [mid])[0]
            return pt.abs_a

        check = cutoff_convergence(observable, config["n_max"])
        conv["cutoff_check"] = {"rel_shift": check.rel_shift, "passed": check.passed,
                                "n_max": check.n_max, "n_max_ref": check.n_max_ref}
    header = ["xi", "omega_d", "re_a", "im_a", "abs_a", "t_norm", "n_photon", "g2"]
    return header, rows, conv


def _cmd_dimer_g2(config: dict[str, Any]):
    rows = []

    def point(j_val: float, n_max: int):
        params = band_resonant_chain(config["omega_r"], config["g"], j_val, 2, "periodic")
        space = LatticeSpace.uniform(2, n_max)
        band_min = photon_band_minimum(params)
        omega_d = band_min - config["g"] + config["drive_offset"]
        rates = DissipationRates(gamma1=config["gamma1"], gamma_phi=config["gamma_phi"],
                                 gamma_kappa=config["gamma_kappa"])
        if not rates.any_nonzero():
            raise ConfigError([("gamma_kappa", "at least one dissipation rate must be positive")])
        from .lattice import build_jchm
        h = build_jchm(params, space)
        liouv = build_liouvillian(h, rates, DriveSpec(xi=config["xi"], omega_d=omega_d,
                                                      driven_sites=(0, 1)), space)
        rho = steady_state(liouv, check_unique=False)
        from .hilbert import annihilation, expectation, photon_op_on
        a0 = photon_op_on(space, 0, annihilation(space.sites[0]))
        n0 = expectation(a0.dagger() @ a0, rho).real
        return {"J": j_val, "omega_d": omega_d, "g2": g2_zero(rho, 0, space),
                "abs_a": abs(expectation(a0, rho)), "n_photon": n0}

    for j_val in config["j_values"]:
        rows.append(point(float(j_val), config["n_max"]))
    conv = {"points": len(rows)}
    if config["cutoff_check"]:
        check = cutoff_convergence(lambda nm: point(float(config["j_values"][0]), nm)["g2"],
                                   config["n_max"])
        conv["cutoff_check"] = {"rel_shift": check.rel_shift, "passed": check.passed}
    header = ["J", "omega_d", "g2", "abs_a", "n_photon"]
    return header, rows, conv


def _cmd_sector_nonlinearity(config: dict[str, Any]):
    rows = []
    band_minima = {}
    for ns_f in config["n_sites_list"]:
        ns = int(ns_f)
        params = band_resonant_chain(config["omega_r"], config["g"], config["J"], ns, "periodic")
        space = LatticeSpace.uniform(ns, config["n_max"])
        u = measured_nonlinearity(params, space)
        ucf = nonlinearity_closed_form(config["g"], ns)
        band_minima[str(ns)] = photon_band_minimum(params)
        rows.append({"n_sites": ns, "u_measured": u, "u_closed_form": ucf,
                     "rel_deviation": (u - ucf) / ucf if ucf else float("nan")})
    conv = {"band_minima": band_minima}
    if config["cutoff_check"]:
        ns = int(config["n_sites_list"][-1])
        params = band_resonant_chain(config["omega_r"], config["g"], config["J"], ns, "periodic")
        check = cutoff_convergence(
            lambda nm: measured_nonlinearity(params, LatticeSpace.uniform(ns, nm)),
            config["n_max"])
        conv["cutoff_check"] = {"rel_shift": check.rel_shift, "passed": check.passed}
    header = ["n_sites", "u_measured", "u_closed_form", "rel_deviation"]
    return header, rows, conv


def _cmd_meanfield_lobes(config: dict[str, Any]):
    jc = JCParams(config["omega_r"], config["omega_q"], config["g"])
    space = SiteSpace(config["n_max"])
    mu = np.linspace(config["mu_min"], config["mu_max"], config["mu_points"])
    zj = np.linspace(config["zj_min"], config["zj_max"], config["zj_points"])
    zj = zj[zj > 0] if config["zj_min"] == 0 else zj
    cells = phase_diagram(jc, mu, zj, space, z=config["z"], psi_max=config["psi_max"])
    rows = [{"mu": c.mu, "zJ": c.zj, "psi": c.psi, "energy": c.energy,
             "n_polariton": c.n_polariton, "phase": c.phase} for c in cells]
    windows = {f"N={n}": mott_window_analytic(jc, n) for n in (1, 2, 3)}
    conv: dict[str, Any] = {"j0_mott_windows": {k: list(v) for k, v in windows.items()}}
    if config["cutoff_check"]:
        from .meanfield import GrandCanonicalParams, minimize_order_parameter
        probe_mu = float(mu[len(mu) // 2])
        probe_zj = float(zj[len(zj) // 2])

        def observable(nm: int) -> float:
            pp = GrandCanonicalParams(jc=jc, mu=probe_mu, z=config["z"],
                                      J=probe_zj / config["z"])
            return minimize_order_parameter(pp, SiteSpace(nm), psi_max=config["psi_max"]).psi

        check = cutoff_convergence(observable, config["n_max"], rtol=1e-4)
        conv["cutoff_check"] = {"rel_shift": check.rel_shift, "passed": check.passed}
    header = ["mu", "zJ", "psi", "energy", "n_polariton", "phase"]
    return header, rows, conv


def _cmd_driven_mf(config: dict[str, Any]):
    rows = []
    fixed_points = []
    any_cycle = False
    rates = DissipationRates(gamma1=config["gamma1"], gamma_phi=config["gamma_phi"],
                             gamma_kappa=config["gamma_kappa"],
                             kappa_ports={0: config["kappa"]} if config["kappa"] > 0 else {})
    if not rates.any_nonzero():
        raise ConfigError([("gamma_kappa", "at least one dissipation rate must be positive")])
    space = SiteSpace(config["n_max"])
    for zj in config["zj_values"]:
        zj = float(zj)
        omega_q = config["omega_r"] - zj
        omega_d = omega_q - config["g"] + config["drive_offset"]
        jc = JCParams(config["omega_r"], omega_q, config["g"])
        result = driven_mf_steady(jc, rates, DriveSpec(xi=config["xi"], omega_d=omega_d),
                                  zj, seeds=tuple(config["seeds"]), space=space,
                                  psi_tol=config["psi_tol"])
        any_cycle = any_cycle or result.limit_cycle
        for fp in result.per_seed:
            rows.append({"zJ": zj, "seed_re": fp.seed.real, "seed_im": fp.seed.imag,
                         "re_psi": fp.psi.real, "im_psi": fp.psi.imag, "g2": fp.g2,
                         "multistable_flag": int(result.multistable),
                         "limit_cycle_flag": int(fp.limit_cycle)})
        fixed_points.append({"zJ": zj,
                             "branches": [[b.psi.real, b.psi.imag] for b in result.branches],
                             "multistable": result.multistable,
                             "limit_cycle": result.limit_cycle})
    conv = {"fixed_points": fixed_points, "limit_cycle_seen": any_cycle}
    header = ["zJ", "seed_re", "seed_im", "re_psi", "im_psi", "g2",
              "multistable_flag", "limit_cycle_flag"]
    return header, rows, conv


def _cmd_modes(config: dict[str, Any]):
    spec = ResonatorSpec(ell=config["ell"], c=config["c"], L_x=config["L_x"],
                         C_minus=config["C_minus"], C_plus=config["C_plus"])
    modes = solve_modes(spec, config["count"])
    rows = []
    for m in modes:
        row = {"mu": m.mu, "omega_bar": m.omega_bar, "omega": m.omega,
               "phi_left": m.left_value, "phi_right": m.right_value,
               "normalization": m.normalization_integral()}
        rows.append(row)
    conv = {"max_normalization_defect":
            max(abs(r["normalization"] - 1.0) for r in rows)}
    header = ["mu", "omega_bar", "omega", "phi_left", "phi_right", "normalization"]
    return header, rows, conv


def _cmd_quantize(config: dict[str, Any]):
    try:
        with open(config["netlist"], "r", encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ConfigError([("netlist", f"file not found: {config['netlist']}")])
    netlist = parse_netlist(text)
    lagr = build_lagrangian(netlist)
    qc = quantize(lagr, charge_cutoff=config["charge_cutoff"],
                  oscillator_levels=config["oscillator_levels"])
    evals = qc.eigenvalues(config["levels"])
    rows = [{"level": i, "energy_joule": float(e)} for i, e in enumerate(evals)]
    conv: dict[str, Any] = {"bases": [{"node": b.node, "kind": b.kind, "size": b.size}
                                      for b in qc.bases]}
    if config["cutoff_check"]:
        qc2 = quantize(lagr, charge_cutoff=config["charge_cutoff"] + 10,
                       oscillator_levels=config["oscillator_levels"] + 10)
        e2 = qc2.eigenvalues(config["levels"])
        shift = float(np.max(np.abs(evals - e2)) / max(np.max(np.abs(e2)), 1e-300))
        conv["basis_check"] = {"rel_shift": shift, "passed": shift < 1e-9}
    header = ["level", "energy_joule"]
    return header, rows, conv


COMMANDS: dict[str, Callable[[dict[str, Any]], tuple[list[str], list[dict], dict]]] = {
    "jc-spectrum": _cmd_jc_spectrum,
    "blockade-scan": _cmd_blockade_scan,
    "dimer-g2": _cmd_dimer_g2,
    "sector-nonlinearity": _cmd_sector_nonlinearity,
    "meanfield-lobes": _cmd_meanfield_lobes,
    "driven-mf": _cmd_driven_mf,
    "modes": _cmd_modes,
    "quantize": _cmd_quantize,
}


# ---------------------------------------------------------------------------
# output plumbing

def _format_cell(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: str, header: list[str], rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(row[h]) for h in header])


def summary_schema() -> dict:
    with resources.files("cqedlat").joinpath("schemas/run_summary.schema.json").open() as fh:
        return json.load(fh)


def build_summary(command: str, config: dict[str, Any], csv_path: str,
                  n_rows: int, convergence: dict) -> dict:
    def jsonable(v: Any) -> Any:
        if isinstance(v, complex):
            return [v.real, v.imag]
        if isinstance(v, (list, tuple)):
            return [jsonable(x) for x in v]
        if isinstance(v, dict):
            return {k: jsonable(x) for k, x in v.items()}
        if isinstance(v, (np.floating, np.integer)):
            return v.item()
        if isinstance(v, (bool, int, float, str)) or v is None:
            return v
        return str(v)

    return {
        "command": command,
        "config": jsonable(config),
        "versions": {
            "cqedlat": __version__,
            "numpy": np.__version__,
            "scipy": metadata.version("scipy"),
            "python": ".".join(str(x) for x in sys.version_info[:3]),
        },
        "convergence": jsonable(convergence),
        "output": {"csv": csv_path, "rows": n_rows},
        "status": "ok",
    }


def run_command(command: str, config: dict[str, Any], csv_path: str,
                summary_path: str | None) -> int:
    import jsonschema

    header, rows, convergence = COMMANDS[command](config)
    write_csv(csv_path, header, rows)
    summary = build_summary(command, config, csv_path, len(rows), convergence)
    jsonschema.validate(summary, summary_schema())
    if summary_path:
        with open(summary_path, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cqedlat",
        description="Circuit QED lattice simulations: spectra, blockade, lobes, modes, circuits.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--output", "-o", default=None, help="CSV output path")
        p.add_argument("--summary", default=None, help="JSON summary path")
        for key, field in schema.items():
            p.add_argument(f"--{key.replace('_', '-')}", dest=f"cfg_{key}",
                           default=None, help=field.help)
    args = parser.parse_args(argv)

    overrides = {k[len("cfg_"):]: v for k, v in vars(args).items() if k.startswith("cfg_")}
    try:
        config = load_config(args.command, args.config, overrides)
    except ConfigError as exc:
        for key, msg in exc.errors:
            print(f"config error at {key}: {msg}", file=sys.stderr)
        return 1

    csv_path = args.output or f"{args.command.replace('-', '_')}.csv"
    summary_path = args.summary or (os.path.splitext(csv_path)[0] + "_summary.json")
    try:
        return run_command(args.command, config, csv_path, summary_path)
    except ConfigError as exc:
        for key, msg in exc.errors:
            print(f"config error at {key}: {msg}", file=sys.stderr)
        return 1
    except (NetlistError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except (ConvergenceError, StiffnessError, MeanFieldConvergenceError) as exc:
        print(f"numerical non-convergence: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
