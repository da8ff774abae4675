"""Batch front door: ``ymh <command> --config <path> [--seed S] [--out DIR]``.

Commands: ``simulate`` (evolve manufactured data and store diagnostics),
``verify-identities`` (null rewritings, the derivative-bracket identity and
split recombination), ``probe-estimates`` (symbol bounds, angle estimate,
weight-lattice comparison and the estimate catalog), ``converge`` (time-step
refinement study) and ``data-check`` (Cauchy-data constraint report).

Configuration is a flat ``key = value`` text file with section prefixes
(``grid.N = 32``); unknown keys are rejected with their line number.  Every
artifact records the hash of the effective configuration, and a fixed
config and seed reproduce artifacts byte for byte.

Exit codes: 0 all enabled checks passed, 1 a check failed, 2 bad
configuration, 3 the evolution produced non-finite values.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, fields as dc_fields, replace
from pathlib import Path

import numpy as np

from . import data as datamod, diagnose, evolve as evolvemod, normlab, nullform, store, system
from .algebra import AlgebraKind, Family
from .errors import BlowupError, ConfigError
from .evolve import EvolveConfig
from .grid import Dealias, GridSpec, rel_l2_diff
from .system import check_power

COMMANDS = ("simulate", "verify-identities", "probe-estimates", "converge", "data-check")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    command: str = ""
    grid_n: int = 32
    grid_l: float = 2.0 * np.pi
    grid_dealias: str = "two-thirds"
    algebra_family: str = "su"
    algebra_n: int = 2
    evolve_dt: float = 1e-3
    evolve_t: float = 0.5
    evolve_integrator: str = "exp_rk4"
    evolve_picard_depth: int = 8
    physics_p: float = 3.0
    norms_eps: float = 0.05
    data_band: float = 2.0
    data_amplitude: float = 0.5
    data_phi_amplitude: float = 0.25
    probes_samples: int = 200_000
    probes_batch: int = 10
    seed: int = 0
    out: str = "runs/out"

    def grid(self) -> GridSpec:
        rule = Dealias.TWO_THIRDS if self.grid_dealias == "two-thirds" else Dealias.NONE
        return GridSpec(self.grid_n, self.grid_l, rule)

    def kind(self) -> AlgebraKind:
        family = Family.SU if self.algebra_family == "su" else Family.SO
        return AlgebraKind(family, self.algebra_n)

    def evolve_config(self) -> EvolveConfig:
        return EvolveConfig(self.evolve_dt, self.evolve_t, self.evolve_integrator,
                            self.evolve_picard_depth)

    def canonical_text(self) -> str:
        # the output directory does not affect results, so it stays out of the hash
        pairs = {_KEYS_BY_FIELD[f.name]: getattr(self, f.name)
                 for f in dc_fields(self) if f.name != "out"}
        return "\n".join(f"{k} = {v}" for k, v in sorted(pairs.items())) + "\n"

    def hash(self) -> str:
        return store.config_hash(self.canonical_text())


_KEY_MAP = {
    "command": ("command", str),
    "grid.N": ("grid_n", int),
    "grid.L": ("grid_l", float),
    "grid.dealias": ("grid_dealias", str),
    "algebra.family": ("algebra_family", str),
    "algebra.n": ("algebra_n", int),
    "evolve.dt": ("evolve_dt", float),
    "evolve.T": ("evolve_t", float),
    "evolve.integrator": ("evolve_integrator", str),
    "evolve.picard_depth": ("evolve_picard_depth", int),
    "physics.p": ("physics_p", float),
    "norms.eps": ("norms_eps", float),
    "data.band": ("data_band", float),
    "data.amplitude": ("data_amplitude", float),
    "data.phi_amplitude": ("data_phi_amplitude", float),
    "probes.samples": ("probes_samples", int),
    "probes.batch": ("probes_batch", int),
    "seed": ("seed", int),
    "out": ("out", str),
}
_KEYS_BY_FIELD = {fld: key for key, (fld, _) in _KEY_MAP.items()}


def parse_config(text: str) -> RunConfig:
    """Parse the flat key = value format, rejecting unknown keys."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = (s.strip() for s in line.partition("="))
        if key not in _KEY_MAP:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        fld, cast = _KEY_MAP[key]
        try:
            values[fld] = cast(val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: field {key!r}: {exc}") from None
    return RunConfig(**values)


def validate(cfg: RunConfig) -> RunConfig:
    if cfg.command and cfg.command not in COMMANDS:
        raise ConfigError(f"field 'command': unknown command {cfg.command!r}")
    if cfg.grid_dealias not in ("two-thirds", "none"):
        raise ConfigError("field 'grid.dealias': must be 'two-thirds' or 'none'")
    if cfg.algebra_family not in ("su", "so"):
        raise ConfigError("field 'algebra.family': must be 'su' or 'so'")
    try:
        check_power(cfg.physics_p)
    except ConfigError:
        raise ConfigError(
            f"field 'physics.p': p={cfg.physics_p} is outside the energy-subcritical "
            "range 2 <= p < 5") from None
    if not 0 < cfg.norms_eps < 0.25:
        raise ConfigError("field 'norms.eps': need 0 < eps < 1/4")
    cfg.grid()
    cfg.kind()
    cfg.evolve_config()
    return cfg


# ---------------------------------------------------------------------------
# Commands


def _headers(cfg: RunConfig) -> dict:
    return {"config_hash": cfg.hash(), "seed": cfg.seed, "grid_n": cfg.grid_n}


def _write_manifest(cfg: RunConfig, outdir: Path, artifacts) -> None:
    lines = [
        f"command = {cfg.command}",
        f"config_hash = {cfg.hash()}",
        "",
        "# effective configuration",
        *cfg.canonical_text().splitlines(),
        "",
        "# artifacts",
        *sorted(str(a) for a in artifacts),
    ]
    (outdir / "run_manifest.txt").write_text("\n".join(lines) + "\n")


def cmd_simulate(cfg: RunConfig, outdir: Path) -> int:
    g, kind = cfg.grid(), cfg.kind()
    d = datamod.make_constraint_data(g, kind, cfg.seed, cfg.data_band,
                                     cfg.data_amplitude, cfg.physics_p,
                                     cfg.data_phi_amplitude)
    state = datamod.to_gauge_state(d)
    store.write_state(outdir / "state_initial.ymh", state,
                      [f"config_hash = {cfg.hash()}"])
    series, states = diagnose.run_with_diagnostics(
        state, cfg.evolve_config(), cfg.physics_p, keep_states=True)
    store.write_state(outdir / "state_final.ymh", states[-1],
                      [f"config_hash = {cfg.hash()}"])
    rows = zip(series.times, series.energy, series.lorenz, series.compatibility, series.gauss)
    store.write_csv(outdir / "series.csv", _headers(cfg),
                    ("time", "energy", "lorenz_residual", "compat_residual", "gauss_residual"),
                    rows)
    _write_manifest(cfg, outdir, ["series.csv", "state_initial.ymh", "state_final.ymh"])
    print(f"simulate: energy drift {series.energy_drift:.3e}, "
          f"final residuals lorenz={series.final_lorenz:.3e} "
          f"compat={series.final_compatibility:.3e}")
    return EXIT_OK


def cmd_verify_identities(cfg: RunConfig, outdir: Path, n_seeds: int = 10) -> int:
    g, kind = cfg.grid(), cfg.kind()
    band = min(cfg.data_band, g.n_points / 6.0)
    rows, ok = [], True
    sub = np.random.SeedSequence(cfg.seed).generate_state(n_seeds)
    for i, s in enumerate(sub):
        pot = datamod.make_lorenz_potential(g, kind, int(s), band)
        psi = nullform.SpacetimeField(
            datamod.random_algebra_field(g, kind, int(s) + 1, band),
            datamod.random_algebra_field(g, kind, int(s) + 2, band),
        )
        rep = nullform.lorenz_identity_residuals(pot, psi)
        rows.append(("contraction-rewrite", i, rep.contraction_residual, 1e-9))
        rows.append(("dt-contraction-rewrite", i, rep.dt_contraction_residual, 1e-9))
        ok &= rep.contraction_residual < 1e-9 and rep.dt_contraction_residual < 1e-9

        u = nullform.SpacetimeField(
            datamod.random_algebra_field(g, kind, int(s) + 3, band),
            datamod.random_algebra_field(g, kind, int(s) + 4, band),
        )
        from ymhlab.grid import l2_norm, pointwise_product
        direct = pointwise_product(u.deriv(1), u.deriv(2), "commutator")
        half = 0.5 * nullform.qab_bracket(u, u, 1, 2)
        scale = max(l2_norm(direct), 1e-300)
        trick = l2_norm(direct - half) / scale
        rows.append(("derivative-bracket-identity", i, trick, 1e-12))
        ok &= trick < 1e-12

        state = datamod.random_gauge_state(g, kind, int(s) + 5, band)
        lam, gam, phi = system.nonlinearities(state, cfg.physics_p)
        lam1, lam2 = system.lambda_split(state)
        gam1, gam2 = system.gamma_split(state)
        phi1, phi2 = system.phi_split(state, cfg.physics_p)
        rec = max(
            max(rel_l2_diff(lam1[j] + lam2[j], lam[j]) for j in range(4)),
            max(rel_l2_diff(gam1[j] + gam2[j], gam[j]) for j in range(6)),
            rel_l2_diff(phi1 + phi2, phi),
        )
        rows.append(("split-recombination", i, rec, 1e-8))
        ok &= rec < 1e-8
    store.write_csv(outdir / "identities.csv", _headers(cfg),
                    ("check", "seed_index", "residual", "tolerance"), rows)
    _write_manifest(cfg, outdir, ["identities.csv"])
    print(f"verify-identities: {'PASS' if ok else 'FAIL'} ({len(rows)} checks)")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_probe_estimates(cfg: RunConfig, outdir: Path) -> int:
    ok = True
    bounds = nullform.check_symbol_bounds(cfg.probes_samples, cfg.seed)
    store.write_csv(outdir / "symbol_bounds.csv", _headers(cfg),
                    ("bound", "samples", "max_ratio", "argmax_xi", "argmax_eta"),
                    store.symbol_bound_rows(bounds))
    ok &= bounds.ratio("qij") <= 1.0 + 1e-12
    ok &= bounds.ratio("q0j") <= 4.0 and bounds.ratio("q0-corrected") <= 4.0

    corners = [(a, b, c) for a in (0.0, 0.25, 0.5) for b in (0.0, 0.25, 0.5)
               for c in (0.0, 0.25, 0.5)]
    angles = nullform.check_angle_estimate(max(cfg.probes_samples // 10, 1000),
                                           corners, cfg.seed)
    store.write_csv(outdir / "angle_estimate.csv", _headers(cfg),
                    ("exponents", "signs", "samples", "max_ratio"),
                    store.angle_rows(angles))
    ok &= angles.max_ratio <= 10.0

    hxh = max(normlab.hxh_check(GridSpec(8), 8, 2 * np.pi, b) for b in (0.6, -0.4, 0.0))
    ok &= hxh == 0.0

    cat = normlab.catalog(cfg.norms_eps)
    reports = [normlab.run_probe(est, GridSpec(8), 8, 2 * np.pi, cfg.probes_batch, cfg.seed)
               for est in cat.values()]
    store.write_csv(outdir / "estimate_probes.csv",
                    {**_headers(cfg), "hxh_violation": hxh},
                    ("estimate", "admissible", "batch", "max_ratio", "resolution", "seed"),
                    store.probe_rows(reports))
    ok &= all(np.isfinite(r.max_ratio) for r in reports)
    _write_manifest(cfg, outdir,
                    ["symbol_bounds.csv", "angle_estimate.csv", "estimate_probes.csv"])
    print(f"probe-estimates: {'PASS' if ok else 'FAIL'} "
          f"(qij {bounds.ratio('qij'):.6f}, angle {angles.max_ratio:.2f}, hxh {hxh})")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_converge(cfg: RunConfig, outdir: Path) -> int:
    g, kind = cfg.grid(), cfg.kind()
    d = datamod.make_constraint_data(g, kind, cfg.seed, cfg.data_band,
                                     cfg.data_amplitude, cfg.physics_p,
                                     cfg.data_phi_amplitude)
    state = datamod.to_gauge_state(d)
    dts = [4 * cfg.evolve_dt, 2 * cfg.evolve_dt, cfg.evolve_dt]
    rows, drifts, lors, coms = [], [], [], []
    for dt in dts:
        series = diagnose.run_with_diagnostics(
            state, replace(cfg.evolve_config(), dt=dt), cfg.physics_p)
        drifts.append(series.energy_drift)
        lors.append(series.final_lorenz)
        coms.append(series.final_compatibility)
        rows.append((dt, series.energy_drift, series.final_lorenz,
                     series.final_compatibility))
    nominal = 4.0 if cfg.evolve_integrator == "exp_rk4" else 1.0
    fits = {}
    for name, errs in (("energy_drift", drifts), ("lorenz", lors), ("compat", coms)):
        fits[name] = diagnose.fit_order(dts, errs) if all(e > 0 for e in errs) else float("nan")
    store.write_csv(outdir / "convergence.csv",
                    {**_headers(cfg), **{f"order_{k}": v for k, v in fits.items()},
                     "nominal_order": nominal},
                    ("dt", "energy_drift", "lorenz_residual", "compat_residual"), rows)
    ok = all(abs(v - nominal) <= 0.5 for v in fits.values() if np.isfinite(v))
    _write_manifest(cfg, outdir, ["convergence.csv"])
    print(f"converge: {'PASS' if ok else 'FAIL'} orders "
          + " ".join(f"{k}={v:.2f}" for k, v in fits.items()))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_data_check(cfg: RunConfig, outdir: Path) -> int:
    g, kind = cfg.grid(), cfg.kind()
    d = datamod.make_constraint_data(g, kind, cfg.seed, cfg.data_band,
                                     cfg.data_amplitude, cfg.physics_p,
                                     cfg.data_phi_amplitude)
    f, dotf = datamod.build_f_data(d)
    f_curv = system.curvature_from_potential(d.a, d.dota)
    consistency = max(rel_l2_diff(x, y) for x, y in zip(f, f_curv))
    gauss = datamod.gauss_residual(d, f)
    ratios = datamod.check_f_bounds(d, f, dotf)
    rows = [
        ("f-vs-curvature", consistency, 1e-12),
        ("gauss-residual", gauss, 1e-10),
        ("data-norm", datamod.data_norm(d), float("inf")),
        ("f-bound-ratio-printed", ratios.f_ratio_printed, float("inf")),
        ("f-bound-ratio-corrected", ratios.f_ratio_corrected, float("inf")),
        ("dotf-bound-ratio", ratios.dotf_ratio, float("inf")),
    ]
    store.write_csv(outdir / "data_check.csv", _headers(cfg),
                    ("quantity", "value", "tolerance"), rows)
    ok = consistency < 1e-12 and gauss < 1e-10
    ok &= all(np.isfinite(r) for r in
              (ratios.f_ratio_printed, ratios.f_ratio_corrected, ratios.dotf_ratio))
    _write_manifest(cfg, outdir, ["data_check.csv"])
    print(f"data-check: {'PASS' if ok else 'FAIL'} "
          f"(f-vs-curvature {consistency:.2e}, gauss {gauss:.2e})")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


_DISPATCH = {
    "simulate": cmd_simulate,
    "verify-identities": cmd_verify_identities,
    "probe-estimates": cmd_probe_estimates,
    "converge": cmd_converge,
    "data-check": cmd_data_check,
}


def run(cfg: RunConfig) -> int:
    cfg = validate(cfg)
    if cfg.command not in _DISPATCH:
        raise ConfigError(f"field 'command': no command selected (one of {COMMANDS})")
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        return _DISPATCH[cfg.command](cfg, outdir)
    except BlowupError as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ymh",
        description="Batch runner for the Lorenz-gauge gauge-field laboratory.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, default=None,
                        help="flat key = value configuration file")
    parser.add_argument("--seed", type=int, default=None, help="override the seed")
    parser.add_argument("--out", type=str, default=None, help="override the output directory")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config.read_text()) if args.config else RunConfig()
        cfg = replace(cfg, command=args.command)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.out is not None:
            cfg = replace(cfg, out=args.out)
        return run(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
