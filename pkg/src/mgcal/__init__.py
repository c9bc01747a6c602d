__version__ = "0.1.0"

from mgcal.simulator.game_simulator import GameSimulator
from mgcal.calibration.calibrator import Calibrator
