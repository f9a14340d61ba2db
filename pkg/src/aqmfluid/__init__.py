"""Fluid-model TCP/AQM simulator with RBF queue controllers tuned by GA and PSO."""
from .controllers import (AredParams, AREDController, ConstantProbability, Controller,
                          DropTail, PiParams, PIController, RemParams, REMController, Schedule)
from .fluid import FluidState, HistoryBuffer, NetworkParams, SimulationError, equilibrium
from .neural import TUNED_IRBF, TUNED_RBF, NeuralController, RbfSpec, make_controller
from .scenarios import (RunRecord, Scenario, build_controller, get_scenario, run_scenario,
                        scenario_catalog, simulate, sweep)

__version__ = "0.1.0"
