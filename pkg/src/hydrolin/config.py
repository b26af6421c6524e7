"""Plant configuration files.

Configurations are JSON documents bundling the physical plant data, the
rated values, the curve source (tabulated CSV or synthetic-generator
parameters) and, for Kaplan machines, the on-cam table.  Two example
plants ship with the package: a medium-head Francis unit (90 m net head,
500 m penstock in 20 elements) and a low-head Kaplan unit (15 m net head,
8 elements).
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .circuit import PlantConfig
from .curves import (FRANCIS, KAPLAN, THETA_BEP, CharacteristicCurveSet,
                     OnCamTable, RatedValues, SyntheticSurface, centered_grid,
                     load_curves_csv, synthetic_curve_set)
from .exceptions import ConfigError
from .linearize import DiffSteps

BUNDLED_PLANTS = ("francis", "kaplan")


def _req(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"missing field {where}.{key}")
    return d[key]


def _num(d: dict, key: str, where: str) -> float:
    v = _req(d, key, where)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"field {where}.{key} must be a number, got {v!r}")
    return float(v)


def _grid_from(axis: dict, center: float, where: str) -> np.ndarray:
    step = _num(axis, "step", where)
    below = int(_num(axis, "below", where))
    above = int(_num(axis, "above", where))
    return centered_grid(center, step, below, above)


def _build_synthetic(kind: str, rated: RatedValues, params: dict,
                     where: str) -> CharacteristicCurveSet:
    y_bep = _num(params, "y_bep", where)
    gate = _req(params, "gate_poly", where)
    if not (isinstance(gate, list) and len(gate) == 3):
        raise ConfigError(f"{where}.gate_poly must be a 3-element list")
    kwargs = dict(
        kind=kind,
        y_bep=y_bep,
        theta_floor=_num(params, "theta_floor", where),
        gate_poly=tuple(float(v) for v in gate),
        eff_theta=_num(params, "eff_theta", where),
        eff_y=_num(params, "eff_y", where),
    )
    beta_grid = None
    if kind == KAPLAN:
        blade = _req(params, "blade_poly", where)
        if not (isinstance(blade, list) and len(blade) == 3):
            raise ConfigError(f"{where}.blade_poly must be a 3-element list")
        kwargs.update(
            beta_bep=_num(params, "beta_bep", where),
            blade_poly=tuple(float(v) for v in blade),
            eff_beta=_num(params, "eff_beta", where),
            cam_slope=_num(params, "cam_slope", where),
        )
        beta_grid = _grid_from(_req(params, "beta_grid", where), kwargs["beta_bep"],
                               f"{where}.beta_grid")
    surface = SyntheticSurface(**kwargs)
    theta_grid = _grid_from(_req(params, "theta_grid", where), THETA_BEP,
                            f"{where}.theta_grid")
    y_grid = _grid_from(_req(params, "y_grid", where), y_bep, f"{where}.y_grid")
    return synthetic_curve_set(surface, rated, theta_grid, y_grid, beta_grid)


def load_config(path) -> PlantConfig:
    """Load and fully validate a plant configuration file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return build_config(raw, base_dir=path.parent)


def build_config(raw: dict, base_dir: Path | None = None) -> PlantConfig:
    name = _req(raw, "name", "$")
    kind = str(_req(raw, "kind", "$")).lower()
    if kind not in (FRANCIS, KAPLAN):
        raise ConfigError(f"$.kind must be 'francis' or 'kaplan', got {kind!r}")
    heads = _req(raw, "heads", "$")
    pen = _req(raw, "penstock", "$")
    rated_d = _req(raw, "rated", "$")
    rated = RatedValues(
        Q_bep=_num(rated_d, "Q_bep_m3s", "$.rated"),
        N_bep=_num(rated_d, "N_bep_rpm", "$.rated"),
        H_bep=_num(rated_d, "H_bep_m", "$.rated"),
        T_n=_num(rated_d, "T_n_Nm", "$.rated"),
        H_n=_num(rated_d, "H_n_m", "$.rated"),
        D_n=_num(rated_d, "D_n_m", "$.rated"),
    )
    y_range = _req(raw, "y_range", "$")
    if not (isinstance(y_range, list) and len(y_range) == 2):
        raise ConfigError("$.y_range must be [y_min, y_max]")

    curve_src = _req(raw, "curves", "$")
    if "synthetic" in curve_src:
        curves = _build_synthetic(kind, rated, curve_src["synthetic"],
                                  "$.curves.synthetic")
    elif "csv" in curve_src:
        csv_path = Path(curve_src["csv"])
        if base_dir is not None and not csv_path.is_absolute():
            csv_path = base_dir / csv_path
        curves = load_curves_csv(csv_path, kind, rated)
    else:
        raise ConfigError("$.curves needs a 'synthetic' or 'csv' source")

    cam = None
    if kind == KAPLAN:
        cam_d = _req(raw, "on_cam", "$")
        cam = OnCamTable(y_points=np.asarray(_req(cam_d, "y", "$.on_cam"), dtype=float),
                         beta_points=np.asarray(_req(cam_d, "beta", "$.on_cam"),
                                                dtype=float))

    steps = None
    if "linearization" in raw:
        lin = raw["linearization"]
        steps = DiffSteps(
            eps_Q=_num(lin, "eps_Q_m3s", "$.linearization")
            if "eps_Q_m3s" in lin else 1e-3 * rated.Q_bep,
            eps_N=_num(lin, "eps_N_rpm", "$.linearization")
            if "eps_N_rpm" in lin else 1e-3 * rated.N_bep,
            eps_y=_num(lin, "eps_y", "$.linearization")
            if "eps_y" in lin else 1e-3,
            eps_beta=_num(lin, "eps_beta", "$.linearization")
            if "eps_beta" in lin else 1e-3,
        )

    n_el = _num(pen, "elements", "$.penstock")
    if n_el != int(n_el):
        raise ConfigError("$.penstock.elements must be an integer")
    return PlantConfig(
        name=str(name),
        kind=kind,
        H_r=_num(heads, "reservoir_m", "$.heads"),
        H_d=_num(heads, "downstream_m", "$.heads"),
        length=_num(pen, "length_m", "$.penstock"),
        n_elements=int(n_el),
        diameter=_num(pen, "diameter_m", "$.penstock"),
        area=_num(pen, "area_m2", "$.penstock"),
        friction=_num(pen, "friction", "$.penstock"),
        wave_speed=_num(pen, "wave_speed_ms", "$.penstock"),
        inertia=_num(raw, "inertia_kgm2", "$"),
        rated=rated,
        y_range=(float(y_range[0]), float(y_range[1])),
        curves=curves,
        on_cam=cam,
        gravity=_num(raw, "gravity_ms2", "$") if "gravity_ms2" in raw else 9.81,
        diff_steps=steps,
    )


def bundled_config_path(plant: str) -> Path:
    """Filesystem path of a bundled example plant ('francis' or 'kaplan')."""
    names = {"francis": "francis_medium.json", "kaplan": "kaplan_low.json"}
    if plant not in names:
        raise ConfigError(f"unknown bundled plant {plant!r}; "
                          f"pick one of {sorted(names)}")
    return Path(resources.files("hydrolin").joinpath("data", names[plant]))


def load_plant(plant: str) -> PlantConfig:
    """Load a bundled example plant by short name."""
    return load_config(bundled_config_path(plant))
