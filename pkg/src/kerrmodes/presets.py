"""Figure presets: parameter bundles and series builders for the six standard plots.

Each preset pins the parameters of one published figure: bistability curves
for increasing mode order (fig1) and relative detuning (fig2), quadrature
squeezing spectra with a TEM00 local oscillator (fig3, fig4), with an
optimized local oscillator (fig5), and total-intensity squeezing (fig6).
Working points follow the reproducible offset rule: on the upper branch at
phi_t - epsilon * W with epsilon = 0.02.

Builders return plain Series records (label + named columns) that the CLI
writes as CSV/JSON and the plotting layer renders; identical inputs always
produce identical numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cavity import CavityConfig, bistability_scan, scattering_matrix
from .spectra import intensity_noise, optimized_lo_noise, optimum_quadrature
from .twomode import (
    TwoModeConfig,
    _from_cavity_state,
    output_correlation_twomode,
    two_mode_scan,
)

VACUUM1 = np.array([[1.0, 0.0], [0.0, 0.0]])

DEFAULT_EPSILON = 0.02
DEFAULT_OMEGA_MAX = 5.0
DEFAULT_OMEGA_POINTS = 501


@dataclass(frozen=True)
class Series:
    """One labeled curve: parallel named columns, first two are (x, y)."""

    label: str
    columns: dict[str, np.ndarray]
    dashed: bool = False

    @property
    def x(self) -> np.ndarray:
        return next(iter(self.columns.values()))

    @property
    def y(self) -> np.ndarray:
        it = iter(self.columns.values())
        next(it)
        return next(it)


@dataclass(frozen=True)
class FigureResult:
    """A complete figure: series plus axis/reference-line metadata."""

    name: str
    title: str
    xlabel: str
    ylabel: str
    series: list[Series]
    params: dict
    baseline: float | None = None
    floor: float | None = None


@dataclass(frozen=True)
class FigurePreset:
    """Read-only parameter bundle reproducing one published figure."""

    name: str
    description: str
    params: dict = field(default_factory=dict)


PRESETS: dict[str, FigurePreset] = {
    "fig1": FigurePreset(
        "fig1",
        "bistability curves vs mode order p = 1..5, K = 2.5, delta_phi = 0",
        {"k_nl": 2.5, "delta_phi": 0.0, "orders": [1, 2, 3, 4, 5],
         "phi_min": -2.0, "phi_max": 6.0}),
    "fig2": FigurePreset(
        "fig2",
        "bistability curves vs relative detuning at p = 4, K = 2.5, "
        "with the locus of curve maxima",
        {"k_nl": 2.5, "p": 4, "delta_phis": [2.0, 1.0, 0.0, -1.0, -2.0],
         "phi_min": -2.0, "phi_max": 6.0}),
    "fig3": FigurePreset(
        "fig3",
        "optimum quadrature squeezing, TEM00 local oscillator, p = 3..7, "
        "K = 2.5, delta_phi = 1",
        {"k_nl": 2.5, "delta_phi": 1.0, "orders": [3, 4, 5, 6, 7],
         "epsilon": DEFAULT_EPSILON}),
    "fig4": FigurePreset(
        "fig4",
        "optimum quadrature squeezing vs relative detuning, TEM00 local "
        "oscillator, p = 4, K = 2.5",
        {"k_nl": 2.5, "p": 4, "delta_phis": [2.0, 1.0, 0.0, -1.0, -2.0],
         "epsilon": DEFAULT_EPSILON}),
    "fig5": FigurePreset(
        "fig5",
        "optimum squeezing with an optimized local oscillator, p = 3..7, "
        "K = 2.5, delta_phi = 1",
        {"k_nl": 2.5, "delta_phi": 1.0, "orders": [3, 4, 5, 6, 7],
         "epsilon": DEFAULT_EPSILON}),
    "fig6": FigurePreset(
        "fig6",
        "total-intensity squeezing, p = 3..7, K = 2.5, delta_phi = 1",
        {"k_nl": 2.5, "delta_phi": 1.0, "orders": [3, 4, 5, 6, 7],
         "epsilon": DEFAULT_EPSILON}),
}


def omega_grid(omega_max: float = DEFAULT_OMEGA_MAX,
               points: int = DEFAULT_OMEGA_POINTS) -> np.ndarray:
    return np.linspace(0.0, omega_max, points)


def _curve_series(curve, label: str, dashed: bool = False) -> Series:
    return Series(label=label, dashed=dashed, columns={
        "phi": curve.phi,
        "intensity": curve.intensity,
        "branch": np.asarray(curve.branch, dtype=object),
        "stable": curve.stable.astype(int),
    })


def _single_mode_curve(k_nl: float, phi_min: float, phi_max: float):
    cfg = CavityConfig(k_nl=k_nl, detunings=(0.0,), orders=(0,))
    return bistability_scan(cfg, phi_min, phi_max)


def _single_mode_spectrum(k_nl: float, omegas: np.ndarray, observable: str,
                          epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    wp = _single_mode_curve(k_nl, -2.0, 6.0).working_point(epsilon)
    values = np.empty_like(omegas)
    for i, omega in enumerate(omegas):
        s = scattering_matrix(wp.config, wp.amps, omega)
        v = s @ VACUUM1 @ s.conj().T
        if observable == "intensity":
            values[i] = intensity_noise(v, wp.outputs)
        else:
            values[i] = optimum_quadrature(v)[1]
    return values


def _two_mode_spectrum(k_nl: float, p: int, delta_phi: float,
                       omegas: np.ndarray, observable: str,
                       epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    curve = two_mode_scan(k_nl, p, delta_phi)
    state = curve.working_point(epsilon)
    cfg = TwoModeConfig(k_nl=k_nl, p=p,
                        phi_a=float(state.config.detunings[0]),
                        phi_b=float(state.config.detunings[1]))
    wp = _from_cavity_state(state, cfg)
    values = np.empty_like(omegas)
    for i, omega in enumerate(omegas):
        v = output_correlation_twomode(wp, cfg, omega)
        if observable == "intensity":
            values[i] = intensity_noise(v, wp.outputs)
        elif observable == "optimized":
            values[i] = optimized_lo_noise(v)[2]
        else:
            values[i] = optimum_quadrature(v)[1]
    return values


def build_fig1(omega_max=None, points=None) -> FigureResult:
    params = PRESETS["fig1"].params
    series = [
        _curve_series(two_mode_scan(params["k_nl"], p, params["delta_phi"],
                                    params["phi_min"], params["phi_max"]),
                      label=f"p={p}")
        for p in params["orders"]]
    series.append(_curve_series(
        _single_mode_curve(params["k_nl"], params["phi_min"], params["phi_max"]),
        label="single-mode", dashed=True))
    return FigureResult(
        name="fig1", title="Bistability curves, two-mode coupling",
        xlabel="cavity detuning phi", ylabel="fundamental intensity",
        series=series, params=dict(params))


def build_fig2(omega_max=None, points=None) -> FigureResult:
    params = PRESETS["fig2"].params
    series = [
        _curve_series(two_mode_scan(params["k_nl"], params["p"], dphi,
                                    params["phi_min"], params["phi_max"]),
                      label=f"dphi={dphi:g}")
        for dphi in params["delta_phis"]]
    # locus of bistability-curve maxima over a finer relative-detuning grid
    maxima_phi, maxima_i = [], []
    for dphi in np.linspace(-2.0, 2.0, 21):
        curve = two_mode_scan(params["k_nl"], params["p"], float(dphi),
                              params["phi_min"], params["phi_max"])
        i = int(np.argmax(curve.intensity))
        maxima_phi.append(curve.phi[i])
        maxima_i.append(curve.intensity[i])
    series.append(Series(label="maxima", dashed=True, columns={
        "phi": np.array(maxima_phi), "intensity": np.array(maxima_i)}))
    return FigureResult(
        name="fig2", title="Bistability curves vs relative detuning (p=4)",
        xlabel="cavity detuning phi", ylabel="fundamental intensity",
        series=series, params=dict(params))


def _spectrum_figure(name: str, title: str, observable: str,
                     single_reference: bool, omega_max, points) -> FigureResult:
    params = PRESETS[name].params
    omegas = omega_grid(omega_max or DEFAULT_OMEGA_MAX,
                        points or DEFAULT_OMEGA_POINTS)
    series = []
    for p in params["orders"]:
        values = _two_mode_spectrum(params["k_nl"], p, params["delta_phi"],
                                    omegas, observable, params["epsilon"])
        series.append(Series(label=f"p={p}",
                             columns={"omega": omegas, "value": values}))
    if single_reference:
        ref_observable = "intensity" if observable == "intensity" else "quadrature"
        values = _single_mode_spectrum(params["k_nl"], omegas, ref_observable,
                                       params["epsilon"])
        series.append(Series(label="single-mode", dashed=True,
                             columns={"omega": omegas, "value": values}))
    return FigureResult(
        name=name, title=title, xlabel="normalized frequency omega",
        ylabel="noise relative to shot (0 = shot, -1 = perfect squeezing)",
        series=series, params=dict(params), baseline=0.0, floor=-1.0)


def build_fig3(omega_max=None, points=None) -> FigureResult:
    return _spectrum_figure(
        "fig3", "Optimum squeezing, TEM00 local oscillator",
        "quadrature", True, omega_max, points)


def build_fig4(omega_max=None, points=None) -> FigureResult:
    params = PRESETS["fig4"].params
    omegas = omega_grid(omega_max or DEFAULT_OMEGA_MAX,
                        points or DEFAULT_OMEGA_POINTS)
    series = []
    for dphi in params["delta_phis"]:
        values = _two_mode_spectrum(params["k_nl"], params["p"], dphi,
                                    omegas, "quadrature", params["epsilon"])
        series.append(Series(label=f"dphi={dphi:g}",
                             columns={"omega": omegas, "value": values}))
    return FigureResult(
        name="fig4", title="Optimum squeezing vs relative detuning (p=4)",
        xlabel="normalized frequency omega",
        ylabel="noise relative to shot (0 = shot, -1 = perfect squeezing)",
        series=series, params=dict(params), baseline=0.0, floor=-1.0)


def build_fig5(omega_max=None, points=None) -> FigureResult:
    return _spectrum_figure(
        "fig5", "Optimum squeezing, optimized local oscillator",
        "optimized", True, omega_max, points)


def build_fig6(omega_max=None, points=None) -> FigureResult:
    return _spectrum_figure(
        "fig6", "Intensity squeezing", "intensity", True, omega_max, points)


BUILDERS = {
    "fig1": build_fig1,
    "fig2": build_fig2,
    "fig3": build_fig3,
    "fig4": build_fig4,
    "fig5": build_fig5,
    "fig6": build_fig6,
}


def build_preset(name: str, omega_max: float | None = None,
                 points: int | None = None) -> FigureResult:
    """Compute every series of the named preset figure."""
    try:
        builder = BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(BUILDERS)}")
    return builder(omega_max=omega_max, points=points)
