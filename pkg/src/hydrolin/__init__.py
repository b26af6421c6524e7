"""Hydropower plant simulation and linear-model extraction toolkit.

Equivalent-circuit penstock + quasi-static turbine models, numerical
linearization around operating points, fixed-step time-domain simulation
of both model classes, and a fidelity benchmark comparing them over an
operating-point x gate-step grid.
"""

__version__ = "0.1.0"

from .circuit import (PlantConfig, RlcParams, StateLayout, assemble_A,
                      assemble_B, nonlinear_rhs, rhs_frozen_R, rlc_params)
from .curves import (CharacteristicCurveSet, OnCamTable, RatedValues,
                     SyntheticSurface, UnitVariables, eval_WB, eval_WH,
                     load_curves_csv, on_cam, polar_angle, save_curves_csv,
                     synthetic_curve_set, turbine_head, turbine_torque,
                     unit_variables)
from .exceptions import (ConfigError, CurveDomainError, DegenerateOriginError,
                         EquilibriumError, HydrolinError, SimulationError)
from .linearize import (DerivativeBundle, DiffSteps, LinearStateSpace,
                        OperatingPoint, central_diff, derivative_bundle,
                        linearize, linearize_francis, linearize_kaplan)
from .sim import (SimOptions, StepSchedule, Trajectory, default_dt,
                  find_equilibrium, read_trajectory_csv, save_trajectory_csv,
                  simulate_linear, simulate_nonlinear)
from .bench import (BenchOptions, BenchmarkReport, ExperimentGrid,
                    ExperimentResult, build_grid, error_series, mae,
                    run_benchmark)
from .config import bundled_config_path, load_config, load_plant

__all__ = [name for name in dir() if not name.startswith("_")]
