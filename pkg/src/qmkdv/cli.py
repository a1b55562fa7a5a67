"""Batch front door: config parsing, study orchestration, reproducible reports.

Studies: identities, simulate, decay, scattering, resonance, oscillatory.
Configuration is flat ``key = value`` text (``#`` comments); every output
file carries the same metadata header (constants, grid, coefficient family,
seed, version) and is byte-identical across repeated invocations with the
same config and seed: floats are written with ``repr`` (shortest roundtrip),
JSON keys are sorted, and no timestamps or machine identifiers appear.

Exit codes: 0 all checks passed, 1 a check failed or a study raised a
numerical error, 2 configuration/usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import littlewood_paley as lp
from .diagnostics import (
    VARIANTS,
    decay_fit,
    dispersive_ratio,
    energy,
    frequency_window,
    ScatteringProbe,
    scattering_monitor,
    sharp_decay_product,
    theta_accumulate,
    theta_coefficient,
    z_norm,
)
from .integrator import InitialSpec, SimConfig, run
from .model import (
    BootstrapConstants,
    CoefficientSpec,
    dyadic_symbol_bound,
    grad_phase_phi,
    phase_phi,
    resonance_points,
    symbol_t1,
    symbol_t2,
)
from .oscillatory import (
    gaussian_two_pi_selftest,
    nonresonant_decay_study,
    resonant_drift_measurement,
    stationary_phase_drift,
    two_pi_identity,
)
from .rng import SplitMix64
from .spectral_core import (
    GridSpec,
    derivative,
    norm,
    profile_from_solution,
    save_snapshot,
    synthesize,
    transform,
)

STUDIES = ("identities", "simulate", "decay", "scattering", "resonance", "oscillatory")


class ConfigError(ValueError):
    """Bad configuration or usage; maps to exit code 2."""


class CheckFailure(RuntimeError):
    """A named check ran and exceeded its tolerance; maps to exit code 1."""


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def _float_list(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as e:
        raise ConfigError(f"expected comma-separated floats, got {text!r}") from e


_KEY_PARSERS = {
    "study.kind": str,
    "grid.n": int,
    "grid.box_length": float,
    "coeff.family": str,
    "coeff.a": float,
    "coeff.b": float,
    "coeff.c": float,
    "initial.amplitude": float,
    "initial.width": float,
    "initial.modulation": float,
    "initial.snapshot": str,
    "run.t_end": float,
    "run.eps_tol": float,
    "run.dt_init": float,
    "run.monitor_count": int,
    "constants.delta": float,
    "constants.p1": float,
    "constants.gamma_l": float,
    "constants.gamma_h": float,
    "constants.s": float,
    "constants.decay_exponent": float,
    "identities.samples": int,
    "decay.t_min": float,
    "decay.t_max": float,
    "decay.samples": int,
    "decay.fit_t_min": float,
    "decay.linear_n": int,
    "decay.linear_box": float,
    "decay.linear_width": float,
    "scattering.target_frequencies": _float_list,
    "scattering.fit_t_min": float,
    "scattering.samples": int,
    "resonance.j_min": int,
    "resonance.j_max": int,
    "resonance.n_axis": int,
    "oscillatory.b_values": _float_list,
    "oscillatory.t_min": float,
    "oscillatory.t_max": float,
    "oscillatory.samples": int,
    "fault.bump_stretch": float,
}


def parse_config(path: str) -> dict:
    """Flat key = value configuration; unknown or duplicate keys are errors."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path!r}: {e}") from e
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEY_PARSERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            out[key] = _KEY_PARSERS[key](value)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {value!r}") from e
    return out


def _grid(cfg: dict, default_n: int, default_box: float) -> GridSpec:
    try:
        return GridSpec(n=cfg.get("grid.n", default_n), box_length=cfg.get("grid.box_length", default_box))
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _coeff(cfg: dict, default_family: str = "cubic_poly", default_a: float = 1.0,
           default_b: float = 1.0, default_c: float = 0.0) -> CoefficientSpec:
    try:
        return CoefficientSpec(
            family=cfg.get("coeff.family", default_family),
            a=cfg.get("coeff.a", default_a),
            b=cfg.get("coeff.b", default_b),
            c=cfg.get("coeff.c", default_c),
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _constants(cfg: dict) -> BootstrapConstants:
    delta = cfg.get("constants.delta", 1e-3)
    try:
        return BootstrapConstants(
            delta=delta,
            p0=delta / 10.0,
            p1=cfg.get("constants.p1", 1e-3),
            gamma_l=cfg.get("constants.gamma_l", 0.0),
            gamma_h=cfg.get("constants.gamma_h", 2.5),
            s=cfg.get("constants.s", 12.0),
            decay_exponent=cfg.get("constants.decay_exponent", 0.48),
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _initial(cfg: dict, default_amp: float, default_width: float) -> InitialSpec:
    if "initial.snapshot" in cfg:
        return InitialSpec(kind="snapshot", path=cfg["initial.snapshot"])
    return InitialSpec(
        kind="gaussian",
        amplitude=cfg.get("initial.amplitude", default_amp),
        width=cfg.get("initial.width", default_width),
        modulation=cfg.get("initial.modulation", 0.0),
    )


def _metadata(grid: GridSpec, coeff: CoefficientSpec, bc: BootstrapConstants, seed: int) -> dict:
    return {
        "artifact_version": __version__,
        "seed": int(seed),
        "grid_n": int(grid.n),
        "grid_box_length": float(grid.box_length),
        "coeff_family": coeff.family,
        "coeff_a": float(coeff.a),
        "coeff_b": float(coeff.b),
        "coeff_c": float(coeff.c),
        "delta": float(bc.delta),
        "p0": float(bc.p0),
        "p1": float(bc.p1),
        "gamma_l": float(bc.gamma_l),
        "gamma_h": float(bc.gamma_h),
        "s": float(bc.s),
        "decay_exponent": float(bc.decay_exponent),
    }


# ---------------------------------------------------------------------------
# Deterministic writers
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, metadata: dict, header: list, rows: list) -> None:
    lines = [f"# {k}={_fmt(metadata[k])}" for k in sorted(metadata)]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _py(obj):
    """Coerce numpy scalars/arrays so json output is type-stable."""
    if isinstance(obj, dict):
        return {k: _py(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_py(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_py(v) for v in obj.tolist()]
    return obj


def write_json(path: Path, obj: dict) -> None:
    path.write_text(json.dumps(_py(obj), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _map(fn, items, threads: int) -> list:
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _uniform_array(rng: SplitMix64, count: int, lo: float, hi: float) -> np.ndarray:
    return np.array([rng.uniform(lo, hi) for _ in range(count)])


# ---------------------------------------------------------------------------
# identities
# ---------------------------------------------------------------------------

def cmd_identities(args, cfg: dict, outdir: Path) -> int:
    samples = cfg.get("identities.samples", 10000)
    stretch = cfg.get("fault.bump_stretch", 1.0)
    coeff = _coeff(cfg)
    bc = _constants(cfg)
    alpha2 = coeff.alpha2
    rng = SplitMix64(args.seed)
    checks = []

    def record(name: str, max_error: float, tolerance: float):
        checks.append(
            {
                "name": name,
                "max_error": float(max_error),
                "tolerance": float(tolerance),
                "passed": bool(max_error <= tolerance),
            }
        )

    # cubic phase: factored product form against the expanded cubic differences
    xi = _uniform_array(rng, samples, -20.0, 20.0)
    e1 = _uniform_array(rng, samples, -20.0, 20.0)
    e2 = _uniform_array(rng, samples, -20.0, 20.0)
    e3 = xi - e1 - e2
    expanded = xi**3 - e3**3 - e1**3 - e2**3
    scale = np.maximum(1.0, np.abs(xi) ** 3 + np.abs(e1) ** 3 + np.abs(e2) ** 3 + np.abs(e3) ** 3)
    record("phase_factorization", np.max(np.abs(phase_phi(xi, e1, e2) - expanded) / scale), 1e-12)

    # six-fold argument symmetry of the cubic symbol, bitwise
    base = symbol_t1(e1, e2, e3, alpha2)
    sym_err = 0.0
    for p in ((e1, e3, e2), (e2, e1, e3), (e2, e3, e1), (e3, e1, e2), (e3, e2, e1)):
        sym_err = max(sym_err, float(np.max(np.abs(symbol_t1(*p, alpha2) - base))))
    record("t1_symmetry", sym_err, 0.0)

    # reduced form on the convolution surface eta1+eta2+eta3 = xi
    xr = _uniform_array(rng, samples, -10.0, 10.0)
    a1 = _uniform_array(rng, samples, -10.0, 10.0)
    a2 = _uniform_array(rng, samples, -10.0, 10.0)
    a3 = xr - a1 - a2
    reduced = (alpha2 / 6.0) * ((a1**2 + a2**2 + a3**2) + xr**2) - 1.0
    rel = np.abs(symbol_t1(a1, a2, a3, alpha2) - reduced) / np.maximum(1.0, np.abs(reduced))
    record("t1_reduced_form", np.max(rel), 1e-12)

    # gradient zeros and phase values at the four stationary points
    grad_err = 0.0
    phase_err = 0.0
    for _ in range(500):
        x = rng.uniform(0.05, 8.0) * (1.0 if rng.uniform() < 0.5 else -1.0)
        rs = resonance_points(x)
        for (p1, p2) in rs.points:
            g1, g2 = grad_phase_phi(x, p1, p2)
            grad_err = max(grad_err, max(abs(g1), abs(g2)) / max(1.0, x * x))
        for (p1, p2) in rs.space_time:
            phase_err = max(phase_err, abs(phase_phi(x, p1, p2)) / max(1.0, abs(x) ** 3))
        q1, q2 = rs.space_only
        phase_err = max(
            phase_err,
            abs(phase_phi(x, q1, q2) - 8.0 * x**3 / 9.0) / max(1.0, abs(x) ** 3),
        )
    record("resonance_gradients", grad_err, 1e-12)
    record("resonance_phase_values", phase_err, 1e-12)

    # exactness of the local quadratic-plus-cubic factorization of the phase
    from .oscillatory import local_phase_residual

    res_err = 0.0
    for _ in range(2000):
        x = rng.uniform(-5.0, 5.0)
        z1 = rng.uniform(-5.0, 5.0)
        z2 = rng.uniform(-5.0, 5.0)
        denom = max(1.0, abs(x) ** 3, abs(z1) ** 3, abs(z2) ** 3)
        res_err = max(res_err, abs(local_phase_residual(x, z1, z2)) / denom)
        res_err = max(res_err, abs(local_phase_residual(x, z1, 0.0)))
    record("local_phase_residual", res_err, 1e-12)

    # quadrilinear symbol spot values
    spots = [
        ((1.0, 1.0, 1.0, 0.0), -5.0),
        ((1.0, 0.0, 0.0, 0.0), -2.0),
        ((0.0, 3.0, -2.0, 1.0), 0.0),
        ((2.0, 1.0, -1.0, 5.0), -10.0),
    ]
    t2_err = max(abs(symbol_t2(*pt) - want) for pt, want in spots)
    record("t2_spot_values", t2_err, 1e-12)

    # dyadic partition of unity (the fault-injection hook enters here)
    def psi(u):
        return lp.bump(stretch * np.asarray(u))

    k_top = 8
    xs = np.linspace(-(2.0**k_top), 2.0**k_top, 4001)
    total = lp.psi_le(xs, 0, psi=psi)
    for k in range(1, k_top + 1):
        total = total + lp.psi_k(xs, k, psi=psi)
    record("lp_partition", np.max(np.abs(total - 1.0)), 1e-12)

    # scaling-field commutators on a localized test field
    g = GridSpec(512, 60.0)
    u = np.exp(-(g.x**2))
    f = transform(g, u)

    def s_apply(field):
        return transform(g, g.x * np.real(synthesize(derivative(field, 1))))

    lhs1 = s_apply(derivative(f, 1)).coeffs - derivative(s_apply(f), 1).coeffs
    rhs1 = -derivative(f, 1).coeffs
    c1 = norm(f.with_coeffs(lhs1 - rhs1), "L2") / norm(f.with_coeffs(rhs1), "L2")

    lhs3 = s_apply(derivative(f, 3)).coeffs - derivative(s_apply(f), 3).coeffs
    rhs3 = -3.0 * derivative(f, 3).coeffs
    c3 = norm(f.with_coeffs(lhs3 - rhs3), "L2") / norm(f.with_coeffs(rhs3), "L2")

    ux = np.real(synthesize(derivative(f, 1)))
    s_vals = g.x * ux
    term1 = derivative(transform(g, 3.0 * u**2 * s_vals), 1)
    cube_xx = np.real(synthesize(derivative(transform(g, u**3), 2)))
    lhs_c = np.real(synthesize(term1)) - g.x * cube_xx
    rhs_c = 3.0 * u**2 * ux
    cc = float(
        np.sqrt(np.sum(np.abs(lhs_c - rhs_c) ** 2)) / np.sqrt(np.sum(np.abs(rhs_c) ** 2))
    )
    record("commutator_s_dx", c1, 1e-8)
    record("commutator_s_dx3", c3, 1e-8)
    record("commutator_cubic", cc, 1e-8)

    checks.sort(key=lambda c: c["name"])
    passed = all(c["passed"] for c in checks)
    report = {
        "study": "identities",
        "metadata": _metadata(GridSpec(512, 60.0), coeff, bc, args.seed),
        "samples": int(samples),
        "checks": checks,
        "passed": passed,
    }
    write_json(outdir / "identities.json", report)
    if not passed:
        names = ", ".join(c["name"] for c in checks if not c["passed"])
        raise CheckFailure(f"identity checks failed: {names}")
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args, cfg: dict, outdir: Path) -> int:
    grid = _grid(cfg, 256, 50.0)
    coeff = _coeff(cfg)
    bc = _constants(cfg)
    t_end = cfg.get("run.t_end", 200.0)
    count = cfg.get("run.monitor_count", 40)
    monitor_times = tuple(t_end * (i + 1) / count for i in range(count))
    try:
        sim = SimConfig(
            grid=grid,
            coeff=coeff,
            initial=_initial(cfg, 0.01, 1.0),
            t_end=t_end,
            eps_tol=cfg.get("run.eps_tol", 3e-8),
            dt_init=cfg.get("run.dt_init"),
            monitor_times=monitor_times,
            linear_only=args.linear_only,
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e

    def observer(phi, rec):
        rec["linf"] = norm(phi, "Linf")

    state, records = run(sim, observer=observer)
    meta = _metadata(grid, coeff, bc, args.seed)
    header = ["t", "mass", "l2", "hamiltonian", "linf"]
    rows = [[r[k] for k in header] for r in records]
    write_csv(outdir / "monitor.csv", meta, header, rows)

    m0, l0, h0 = records[0]["mass"], records[0]["l2"], records[0]["hamiltonian"]
    report = {
        "study": "simulate",
        "metadata": meta,
        "steps": state.steps,
        "rejected_steps": state.rejected,
        "final_dt": state.dt,
        "mass_drift_abs": max(abs(r["mass"] - m0) for r in records),
        "l2_drift_rel": max(abs(r["l2"] - l0) for r in records) / l0,
        "hamiltonian_drift_rel": max(abs(r["hamiltonian"] - h0) for r in records) / abs(h0),
    }
    write_json(outdir / "report.json", report)
    save_snapshot(outdir / "final_state.bin", state.phi, coeff.identifier())
    return 0


# ---------------------------------------------------------------------------
# decay
# ---------------------------------------------------------------------------

def cmd_decay(args, cfg: dict, outdir: Path) -> int:
    grid = _grid(cfg, 6144, 4500.0)
    coeff = _coeff(cfg)
    bc = _constants(cfg)
    meta = _metadata(grid, coeff, bc, args.seed)
    t_min = cfg.get("decay.t_min", 20.0)
    t_max = cfg.get("decay.t_max", 500.0)
    n_samples = cfg.get("decay.samples", 25)

    # Free Airy evolution of a fixed Gaussian on its own wide box (exact
    # propagator, no stepping).  The plain sup norm decays at t^{-1/3}; for
    # one derivative the sup is weighted by (1+|x|/t^{1/3})^{-1/4}, which
    # cancels the |x|^{1/4} growth of the stationary-phase tail so that the
    # weighted sup decays at the interior rate t^{-2/3}.
    lin_grid = GridSpec(cfg.get("decay.linear_n", 16384), cfg.get("decay.linear_box", 12000.0))
    lin_width = cfg.get("decay.linear_width", 1.5)
    h = transform(lin_grid, np.exp(-((lin_grid.x / lin_width) ** 2)))
    times = [float(t) for t in np.exp(np.linspace(math.log(t_min), math.log(t_max), n_samples))]
    rows = []
    from .spectral_core import free_evolve

    for t in times:
        phi_t = free_evolve(h, t)
        dx_vals = np.abs(synthesize(derivative(phi_t, 1)))
        weight = (1.0 + np.abs(lin_grid.x) * t ** (-1.0 / 3.0)) ** (-0.25)
        rows.append(
            [
                t,
                norm(phi_t, "Linf"),
                float(np.max(dx_vals * weight)),
                dispersive_ratio(h, t, 0.0),
                dispersive_ratio(h, t, 1.0),
            ]
        )
    write_csv(
        outdir / "linear_decay.csv",
        meta,
        ["t", "linf", "weighted_linf_dx", "ratio_beta0", "ratio_beta1"],
        rows,
    )
    slope0, err0 = decay_fit([(r[0], r[1]) for r in rows], (t_min, t_max))
    slope1, err1 = decay_fit([(r[0], r[2]) for r in rows], (t_min, t_max))
    r0 = [r[3] for r in rows]
    r1 = [r[4] for r in rows]
    report = {
        "study": "decay",
        "metadata": meta,
        "linear": {
            "linf_slope": slope0,
            "linf_slope_stderr": err0,
            "weighted_linf_dx_slope": slope1,
            "weighted_linf_dx_slope_stderr": err1,
            "ratio_beta0_spread": max(r0) / min(r0),
            "ratio_beta1_spread": max(r1) / min(r1),
            "linf_slope_ok": bool(abs(slope0 + 1.0 / 3.0) <= 0.03),
            "weighted_linf_dx_slope_ok": bool(abs(slope1 + 2.0 / 3.0) <= 0.05),
            "ratios_ok": bool(max(r0) / min(r0) <= 2.0 and max(r1) / min(r1) <= 2.0),
        },
    }

    if not args.linear_only:
        t_end = cfg.get("run.t_end", 500.0)
        fit_min = cfg.get("decay.fit_t_min", 50.0)
        monitor_times = tuple(
            float(t) for t in np.exp(np.linspace(0.0, math.log(t_end), 40))
        )
        try:
            sim = SimConfig(
                grid=grid,
                coeff=coeff,
                initial=_initial(cfg, 0.02, 3.0),
                t_end=t_end,
                eps_tol=cfg.get("run.eps_tol", 1e-9),
                dt_init=cfg.get("run.dt_init"),
                monitor_times=monitor_times,
            )
        except ValueError as e:
            raise ConfigError(str(e)) from e

        def observer(phi, rec):
            t = phi.time
            rec["linf_dx"] = norm(derivative(phi, 1), "Linf")
            rec["linf_dxx"] = norm(derivative(phi, 2), "Linf")
            rec["sharp_product"] = sharp_decay_product(phi)
            rec["z_norm"] = z_norm(phi, bc)
            eb = energy(phi, t, coeff, bc)
            rec["energy_total"] = eb.total
            rec["h_mass_fraction"] = eb.h_mass_fraction

        state, records = run(sim, observer=observer)
        header = [
            "t",
            "mass",
            "l2",
            "hamiltonian",
            "linf_dx",
            "linf_dxx",
            "sharp_product",
            "z_norm",
            "energy_total",
            "h_mass_fraction",
        ]
        write_csv(outdir / "decay_monitor.csv", meta, header, [[r[k] for k in header] for r in records])

        window = (fit_min, t_end)
        sdx, sdx_err = decay_fit([(r["t"], r["linf_dx"]) for r in records if r["t"] > 0], window)
        sdxx, sdxx_err = decay_fit([(r["t"], r["linf_dxx"]) for r in records if r["t"] > 0], window)
        sprod, sprod_err = decay_fit([(r["t"], r["sharp_product"]) for r in records if r["t"] > 0], window)
        e_ratio = [r["energy_total"] * (1.0 + r["t"]) ** (-2.0 * bc.p0) for r in records]
        z_vals = [r["z_norm"] for r in records]
        report["nonlinear"] = {
            "steps": state.steps,
            "rejected_steps": state.rejected,
            "linf_dx_slope": sdx,
            "linf_dx_slope_stderr": sdx_err,
            "linf_dxx_slope": sdxx,
            "linf_dxx_slope_stderr": sdxx_err,
            "sharp_product_slope": sprod,
            "sharp_product_slope_stderr": sprod_err,
            "energy_ratio_max": max(e_ratio) / e_ratio[0],
            "energy_ratio_min": min(e_ratio) / e_ratio[0],
            "z_ratio_max": max(z_vals) / z_vals[0],
            "z_ratio_min": min(z_vals) / z_vals[0],
            "h_mass_fraction_min": min(r["h_mass_fraction"] for r in records),
            "linf_dx_slope_ok": bool(abs(sdx + 0.5) <= 0.07),
            "linf_dxx_slope_ok": bool(abs(sdxx + 0.5) <= 0.07),
            "sharp_product_slope_ok": bool(abs(sprod + 1.0) <= 0.15),
            "bounded_ok": bool(
                max(e_ratio) / e_ratio[0] <= 4.0
                and min(e_ratio) / e_ratio[0] >= 0.25
                and max(z_vals) / z_vals[0] <= 4.0
                and min(z_vals) / z_vals[0] >= 0.25
            ),
        }

    write_json(outdir / "decay_report.json", report)
    return 0


# ---------------------------------------------------------------------------
# scattering
# ---------------------------------------------------------------------------

def cmd_scattering(args, cfg: dict, outdir: Path) -> int:
    grid = _grid(cfg, 8192, 6000.0)
    coeff = _coeff(cfg, default_family="linear", default_a=1.0, default_b=0.0)
    bc = _constants(cfg)
    meta = _metadata(grid, coeff, bc, args.seed)
    t_end = cfg.get("run.t_end", 128.0)
    n_samples = cfg.get("scattering.samples", 121)
    fit_t_min = cfg.get("scattering.fit_t_min", 16.0)
    targets = cfg.get("scattering.target_frequencies", (1.0, 1.0011, 1.0021))

    try:
        probe = ScatteringProbe.from_grid(grid, targets, coeff.alpha2)
    except ValueError as e:
        raise ConfigError(str(e)) from e

    dyadics = {float(2**k) for k in range(int(math.log2(t_end)) + 1) if 2**k <= t_end}
    geom = {
        float(t)
        for t in np.exp(np.linspace(0.0, math.log(t_end), n_samples))[1:-1]
    }
    monitor_times = tuple(sorted(dyadics | geom | {1.0, float(t_end)}))

    try:
        sim = SimConfig(
            grid=grid,
            coeff=coeff,
            initial=_initial(cfg, 0.35, 2.0),
            t_end=t_end,
            eps_tol=cfg.get("run.eps_tol", 1e-8),
            dt_init=cfg.get("run.dt_init"),
            monitor_times=monitor_times,
            linear_only=args.linear_only,
            # for the purely cubic linear-family nonlinearity a padding
            # factor of 2 already dealiases the products exactly
            pad=2 if coeff.family == "linear" else 3,
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e

    def observer(phi, rec):
        t = phi.time
        if t < 1.0:
            return
        hhat = profile_from_solution(phi, t).coeffs[probe.indices]
        if not probe.times:
            probe.first_sample(hhat, t)
        else:
            theta_accumulate(probe, hhat, probe.times[-1], t)

    run(sim, observer=observer)

    header = ["t"]
    for i in range(len(probe.frequencies)):
        header += [f"abs_h_{i}", f"arg_h_{i}", f"theta_a_{i}", f"theta_b_{i}"]
    rows = []
    for m, t in enumerate(probe.times):
        row = [t]
        for i in range(len(probe.frequencies)):
            row += [
                abs(probe.h_history[m][i]),
                float(np.angle(probe.h_history[m][i])),
                probe.theta["A"][m][i],
                probe.theta["B"][m][i],
            ]
        rows.append(row)
    write_csv(outdir / "theta.csv", meta, header, rows)

    reports = scattering_monitor(probe, fit_t_min=fit_t_min)
    matched = [v for v in VARIANTS if all(r["matched"] for r in reports if r["variant"] == v)]
    drift_rows = resonant_drift_measurement(
        [float(x) for x in probe.frequencies],
        alpha2=coeff.alpha2,
        amplitude=cfg.get("initial.amplitude", 0.35),
        width=cfg.get("initial.width", 2.0),
        grid=grid,
    )
    window_floor = min(
        float(np.min(frequency_window(t, probe.frequencies, bc))) for t in (fit_t_min, t_end)
    )
    report = {
        "study": "scattering",
        "metadata": meta,
        "probe_frequencies": [float(x) for x in probe.frequencies],
        "window_floor": window_floor,
        "per_variant": reports,
        "matched_variant": matched[0] if len(matched) == 1 else "none",
        "variant_coefficients": {
            v: [theta_coefficient(float(x), coeff.alpha2, v) for x in probe.frequencies]
            for v in VARIANTS
        },
        "frozen_profile_drift": drift_rows,
        "stationary_phase_drift": [
            stationary_phase_drift(float(x), coeff.alpha2) for x in probe.frequencies
        ],
    }
    write_json(outdir / "scattering_report.json", report)
    return 0


# ---------------------------------------------------------------------------
# resonance
# ---------------------------------------------------------------------------

def cmd_resonance(args, cfg: dict, outdir: Path) -> int:
    coeff = _coeff(cfg)
    bc = _constants(cfg)
    j_min = cfg.get("resonance.j_min", -4)
    j_max = cfg.get("resonance.j_max", 4)
    n_axis = cfg.get("resonance.n_axis", 384)
    if j_min > j_max:
        raise ConfigError("resonance.j_min must be <= resonance.j_max")
    tasks = [(which, j) for which in ("T1", "dT1") for j in range(j_min, j_max + 1)]

    def evaluate(task):
        which, j = task
        rep = dyadic_symbol_bound(j, j, j, coeff.alpha2, which=which, n_axis=n_axis, refine=True)
        return [which, j, rep["ratio"], rep["refined_ratio"], rep["rel_change"]]

    rows = _map(evaluate, tasks, args.threads)
    meta = _metadata(GridSpec(16, 2.0 * math.pi), coeff, bc, args.seed)
    meta["n_axis"] = n_axis
    write_csv(
        outdir / "resonance.csv",
        meta,
        ["which", "j1", "ratio", "refined_ratio", "rel_change"],
        rows,
    )
    summary = {}
    for which in ("T1", "dT1"):
        vals = [r[2] for r in rows if r[0] == which]
        changes = [r[4] for r in rows if r[0] == which]
        summary[which] = {
            "ratio_max": max(vals),
            "ratio_min": min(vals),
            "ratio_spread": max(vals) / min(vals),
            "max_rel_change": max(changes),
            "spread_ok": bool(max(vals) / min(vals) <= 10.0),
            "doubling_ok": bool(max(changes) <= 0.02),
        }
    report = {"study": "resonance", "metadata": meta, "summary": summary}
    write_json(outdir / "resonance_report.json", report)
    return 0


# ---------------------------------------------------------------------------
# oscillatory
# ---------------------------------------------------------------------------

def cmd_oscillatory(args, cfg: dict, outdir: Path) -> int:
    coeff = _coeff(cfg)
    bc = _constants(cfg)
    meta = _metadata(GridSpec(16, 2.0 * math.pi), coeff, bc, args.seed)
    b_values = cfg.get("oscillatory.b_values", (8.0, 16.0, 32.0, 64.0, 128.0))
    t_min = cfg.get("oscillatory.t_min", 3.0)
    t_max = cfg.get("oscillatory.t_max", 96.0)
    n_t = cfg.get("oscillatory.samples", 45)

    results = _map(two_pi_identity, b_values, args.threads)
    rows = [[r.parameter, r.value.real, r.value.imag, r.error] for r in results]
    write_csv(outdir / "two_pi.csv", meta, ["parameter", "value_re", "value_im", "error"], rows)

    self_tests = [gaussian_two_pi_selftest(b) for b in (8.0, 16.0)]

    def t_grid(lo, hi):
        return [float(t) for t in np.exp(np.linspace(math.log(lo), math.log(hi), n_t))]

    separated = nonresonant_decay_study(t_grid(t_min, t_max), region="separated", alpha2=coeff.alpha2)
    resonant = nonresonant_decay_study(t_grid(t_min, 3.0 * t_max), region="resonant", alpha2=coeff.alpha2)
    for name, study in (("separated", separated), ("resonant", resonant)):
        write_csv(
            outdir / f"{name}.csv",
            meta,
            ["parameter", "value_re", "value_im", "error"],
            [[t, v, 0.0, 0.0] for t, v in study["series"]],
        )

    weighted = [r.error * math.sqrt(r.parameter) for r in results]
    report = {
        "study": "oscillatory",
        "metadata": meta,
        "two_pi": {
            "b_values": [r.parameter for r in results],
            "errors": [r.error for r in results],
            "error_times_sqrt_b": weighted,
            "weighted_bounded_ok": bool(max(weighted) <= max(weighted[0], 1e-3)),
            "final_error_ok": bool(results[-1].error < 1e-3),
        },
        "gaussian_selftest": [
            {"B": r.parameter, "error": r.error, "ok": bool(r.error <= 1e-8)} for r in self_tests
        ],
        "contrast": {
            "separated_slope": separated["slope"],
            "separated_stderr": separated["stderr"],
            "resonant_slope": resonant["slope"],
            "resonant_stderr": resonant["stderr"],
            "separated_ok": bool(separated["slope"] <= -0.9),
            "resonant_ok": bool(resonant["slope"] >= -0.7),
        },
    }
    write_json(outdir / "oscillatory_report.json", report)
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_DISPATCH = {
    "identities": cmd_identities,
    "simulate": cmd_simulate,
    "decay": cmd_decay,
    "scattering": cmd_scattering,
    "resonance": cmd_resonance,
    "oscillatory": cmd_oscillatory,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmkdv",
        description="Pseudo-spectral studies of the quasilinear modified KdV equation.",
    )
    sub = parser.add_subparsers(dest="study", required=True)
    for name in STUDIES:
        p = sub.add_parser(name, help=f"run the {name} study")
        p.add_argument("--config", required=True, help="flat key=value configuration file")
        p.add_argument("--out", default=None, help="output directory (default: qmkdv_out/<study>)")
        p.add_argument("--seed", type=int, default=1, help="64-bit seed for randomized suites")
        p.add_argument("--linear-only", action="store_true", help="disable the nonlinearity")
        p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        kind = cfg.get("study.kind")
        if kind is not None and kind != args.study:
            raise ConfigError(f"config is for study {kind!r}, invoked as {args.study!r}")
        outdir = Path(args.out) if args.out else Path("qmkdv_out") / args.study
        outdir.mkdir(parents=True, exist_ok=True)
        return _DISPATCH[args.study](args, cfg, outdir)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except CheckFailure as e:
        print(f"check failure: {e}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, OSError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
