"""Shared fixtures and plant builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from hydrolin import (CharacteristicCurveSet, OnCamTable, PlantConfig,
                      RatedValues, SyntheticSurface, load_plant,
                      synthetic_curve_set)
from hydrolin.curves import THETA_BEP, centered_grid


def make_rated(Q_bep=107.0, N_bep=300.0, H_bep=89.1, T_n=2.769e6, H_n=90.0,
               D_n=4.6) -> RatedValues:
    return RatedValues(Q_bep=Q_bep, N_bep=N_bep, H_bep=H_bep, T_n=T_n,
                       H_n=H_n, D_n=D_n)


def make_francis_surface(**over) -> SyntheticSurface:
    kw = dict(kind="francis", y_bep=0.8, theta_floor=0.05,
              gate_poly=(2.5, 4.6875, 7.8125), eff_theta=0.3, eff_y=0.4)
    kw.update(over)
    return SyntheticSurface(**kw)


def make_kaplan_surface(**over) -> SyntheticSurface:
    kw = dict(kind="kaplan", y_bep=0.8, theta_floor=0.05,
              gate_poly=(2.5, 4.6875, 7.8125), eff_theta=0.3, eff_y=0.4,
              beta_bep=0.7, blade_poly=(1.0, 0.5, 0.3), eff_beta=0.5,
              cam_slope=0.8)
    kw.update(over)
    return SyntheticSurface(**kw)


def make_francis_curves(rated=None, surface=None) -> CharacteristicCurveSet:
    rated = rated or make_rated()
    surface = surface or make_francis_surface()
    return synthetic_curve_set(surface, rated,
                               centered_grid(THETA_BEP, 0.0125, 87, 62),
                               centered_grid(0.8, 0.025, 26, 10))


def make_kaplan_curves(rated=None, surface=None) -> CharacteristicCurveSet:
    rated = rated or make_rated(Q_bep=290.0, N_bep=125.0, H_bep=14.94,
                                T_n=2.979e6, H_n=15.0, D_n=9.0)
    surface = surface or make_kaplan_surface()
    return synthetic_curve_set(surface, rated,
                               centered_grid(THETA_BEP, 0.025, 43, 31),
                               centered_grid(0.8, 0.025, 26, 10),
                               centered_grid(0.7, 0.02, 30, 14))


def make_cam() -> OnCamTable:
    y = np.linspace(0.0, 1.0, 11)
    return OnCamTable(y_points=y, beta_points=0.7 + 0.8 * (y - 0.8))


def make_francis_cfg(n=1, friction=0.004, H_r=95.0, H_d=5.0, length=500.0,
                     curves=None, **over) -> PlantConfig:
    curves = curves or make_francis_curves()
    kw = dict(name="test-francis", kind="francis", H_r=H_r, H_d=H_d,
              length=length, n_elements=n, diameter=4.6, area=16.619,
              friction=friction, wave_speed=1100.0, inertia=6.2e5,
              rated=curves.rated, y_range=(0.2, 1.0), curves=curves)
    kw.update(over)
    return PlantConfig(**kw)


def make_kaplan_cfg(n=2, friction=0.004, H_r=17.0, H_d=2.0, length=120.0,
                    curves=None, **over) -> PlantConfig:
    curves = curves or make_kaplan_curves()
    kw = dict(name="test-kaplan", kind="kaplan", H_r=H_r, H_d=H_d,
              length=length, n_elements=n, diameter=9.0, area=63.617,
              friction=friction, wave_speed=1000.0, inertia=1.36e6,
              rated=curves.rated, y_range=(0.2, 1.0), curves=curves,
              on_cam=make_cam())
    kw.update(over)
    return PlantConfig(**kw)


@pytest.fixture(scope="session")
def francis_plant() -> PlantConfig:
    return load_plant("francis")


@pytest.fixture(scope="session")
def kaplan_plant() -> PlantConfig:
    return load_plant("kaplan")
