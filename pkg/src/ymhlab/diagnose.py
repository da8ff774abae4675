"""Physical verification: energy, constraint propagation, gauge covariance.

The energy is the grid quadrature of

    1/2 sum_{a<b} |F_ab|^2 + 1/2 sum_a |D_a phi|^2 + (1/(p+1)) |phi|^{p+1}

with all six curvature components and all four covariant derivatives counted
positively; the 1/2 on the quadratic pieces against the 1/(p+1) potential
weight is the unique relative normalization conserved along smooth solutions
(checked empirically to integrator accuracy).  The integrand is evaluated
pointwise (no dealiasing: this is quadrature, not a product feeding back
into the dynamics).

Constraint diagnostics: the Lorenz residual ||-d_t A_0 + d^i A_i||, the
curvature compatibility ||F - F^{(A)}|| (the evolved F against the curvature
of the evolved potential), and the Gauss residual of the instantaneous data.
All three start at round-off for properly built data and grow only at the
integrator error rate.
"""
from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace

import numpy as np

from . import data as datamod, evolve as evolvemod, grid as gridmod, system
from .algebra import commutator_entries, inner_entries
from .errors import StructureError
from .evolve import EvolveConfig, Packed, from_half_wave, unpack_half_wave
from .grid import Field, l2_norm, rel_l2_diff
from .system import GaugeState, check_power, curvature_from_potential, gauge_transform


def energy(state: GaugeState, p: float = 3.0) -> float:
    """Total field energy at one time slice; nonnegative by construction."""
    check_power(p)
    g = state.grid
    dens = np.zeros((g.n_points,) * 3)
    for idx in range(6):
        fv = state.f[idx].physical().values
        dens += 0.5 * inner_entries(fv, fv)
    ap = [x.physical().values for x in state.a]
    php = state.phi.physical().values
    for al in range(4):
        if al == 0:
            dphi = state.dtphi.physical().values
        else:
            dphi = gridmod.derivative(state.phi, al - 1).physical().values
        dcov = dphi + commutator_entries(ap[al], php)
        dens += 0.5 * inner_entries(dcov, dcov)
    norm2 = inner_entries(php, php)
    dens += norm2 ** ((p + 1.0) / 2.0) / (p + 1.0)
    return float(g.cell_volume * dens.sum())


def lorenz_residual(state: GaugeState) -> float:
    """||d^alpha A_alpha||_L2 = ||-d_t A_0 + sum_i d_i A_i||_L2."""
    acc = -state.dta[0].spectral()
    for i in range(3):
        acc = acc + gridmod.derivative(state.a[i + 1], i)
    return l2_norm(acc)


def compatibility_residual(state: GaugeState) -> float:
    """Distance between the evolved F and the curvature of the evolved A."""
    f_of_a = curvature_from_potential(state.a, state.dta)
    return float(sum(l2_norm(state.f[i].spectral() - f_of_a[i]) for i in range(6)))


def gauss_residual(state: GaugeState) -> float:
    """Gauss-constraint defect of the instantaneous (A, F, phi) data."""
    d = datamod.CauchyData(state.a, state.dta, state.phi, state.dtphi)
    return datamod.gauss_residual(d, state.f)


@dataclass(frozen=True)
class DiagnosticSeries:
    """Scalar diagnostics along a trajectory."""

    times: tuple[float, ...]
    energy: tuple[float, ...]
    lorenz: tuple[float, ...]
    compatibility: tuple[float, ...]
    gauss: tuple[float, ...]

    def __post_init__(self):
        n = len(self.times)
        if any(len(x) != n for x in (self.energy, self.lorenz, self.compatibility, self.gauss)):
            raise StructureError("diagnostic series lengths differ")
        if any(b <= a for a, b in zip(self.times[:-1], self.times[1:])):
            raise StructureError("diagnostic times must increase strictly")

    @property
    def energy_drift(self) -> float:
        """max_t |E(t) - E(0)| / E(0) (0 when E(0) = 0)."""
        e0 = self.energy[0]
        if e0 == 0.0:
            return 0.0 if all(e == 0.0 for e in self.energy) else np.inf
        return float(max(abs(e - e0) for e in self.energy) / e0)

    @property
    def final_lorenz(self) -> float:
        return self.lorenz[-1]

    @property
    def final_compatibility(self) -> float:
        return self.compatibility[-1]


def run_with_diagnostics(start: GaugeState, cfg: EvolveConfig, p: float = 3.0,
                         record_every: int | None = None,
                         keep_states: bool = False):
    """Evolve and collect the diagnostic series (optionally the snapshots)."""
    times, en, lo, co, ga = [], [], [], [], []
    states = []

    def observer(t: float, packed: Packed):
        s = from_half_wave(unpack_half_wave(packed))
        times.append(t)
        en.append(energy(s, p))
        lo.append(lorenz_residual(s))
        co.append(compatibility_residual(s))
        ga.append(gauss_residual(s))
        if keep_states:
            states.append(s)

    evolvemod.evolve(start, cfg, power=p, record_every=record_every, observer=observer)
    series = DiagnosticSeries(tuple(times), tuple(en), tuple(lo), tuple(co), tuple(ga))
    return (series, states) if keep_states else series


def conservation_check(series: DiagnosticSeries) -> float:
    """Relative energy drift over a run (see DiagnosticSeries.energy_drift)."""
    return series.energy_drift


def fit_order(dts, errors) -> float:
    """Least-squares slope of log(error) against log(dt)."""
    dts = np.asarray(dts, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if np.any(errors <= 0):
        raise StructureError("order fit needs positive errors")
    return float(np.polyfit(np.log(dts), np.log(errors), 1)[0])


@dataclass(frozen=True)
class CovarianceReport:
    times: tuple[float, ...]
    deviation: tuple[float, ...]

    @property
    def max_deviation(self) -> float:
        return max(self.deviation)


def gauge_covariance_test(d, gm, cfg: EvolveConfig, p: float = 3.0,
                          record_every: int | None = None) -> CovarianceReport:
    """Evolve data and transformed data; compare conjugated trajectories.

    For constant gauge maps the flow commutes with conjugation exactly, so
    the deviation is pure floating-point noise plus integrator asymmetry.
    """
    state = datamod.to_gauge_state(d)
    state_t = gauge_transform(state, gm)

    snaps: dict[float, GaugeState] = {}

    def obs1(t, packed):
        snaps[round(t, 12)] = from_half_wave(unpack_half_wave(packed))

    devs: list[tuple[float, float]] = []

    def obs2(t, packed):
        ref = snaps.get(round(t, 12))
        if ref is None:
            return
        ref_t = gauge_transform(ref, gm)
        cur = from_half_wave(unpack_half_wave(packed))
        parts = [rel_l2_diff(ref_t.f[i], cur.f[i]) for i in range(6)]
        parts.append(rel_l2_diff(ref_t.phi, cur.phi))
        devs.append((t, max(parts)))

    evolvemod.evolve(state, cfg, power=p, record_every=record_every, observer=obs1)
    evolvemod.evolve(state_t, cfg, power=p, record_every=record_every, observer=obs2)
    times = tuple(t for t, _ in devs)
    return CovarianceReport(times, tuple(v for _, v in devs))
