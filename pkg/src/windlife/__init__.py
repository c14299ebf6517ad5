"""Desk-scale wind-turbine lifetime-control laboratory.

A reduced-order 5 MW turbine in closed loop with an observer-based
disturbance-accommodating pitch controller whose gains are adapted online
from a rainflow/Miner damage estimate of the tower fore-aft load --
either measured directly or predicted by a linear SVR from standard
measurements -- so that a prescribed fatigue budget is consumed at a
prescribed lifetime.
"""

__version__ = "0.1.0"

from .config import ExperimentConfig, parse_config, validate_config
from .dac import (AugmentedModel, ControllerState, GainSet, WeightProfile,
                  augment_disturbance, check_observability, controller_step,
                  steady_state_rejection_test, synthesize_gains,
                  synthesize_ladder)
from .harness import (MetricsRow, SimulationTrace, benchmark, build_design,
                      compute_metrics, export_report, run_scenario,
                      train_pipeline)
from .lifetime import (LifetimeConfig, PrognosisState, prognosis_tick,
                       select_moment_source)
from .rainflow import (Cycle, RainflowState, SnCurve, estimate_lifetime,
                       finalize, offline_rainflow_oracle, push_sample)
from .svr import (Dataset, SvrHyper, SvrModel, accuracy, grid_search,
                  predict, standardize, train_svr)
from .turbine import (PlantState, StateSpaceModel, TurbineParams,
                      aero_coefficients, linearize, pitch_actuator_step,
                      plant_step, trim)
from .wind import WindProfile, gen_wind_profile

__all__ = [n for n in dir() if not n.startswith("_")]
