"""Bell-CHSH tests of the field-spin entangled state of a coherent control interferometer."""
from .amplitudes import RadialIntegrals
from .bell import MeasurementSettings, chsh, correlator
from .config import build_configuration
from .optimizer import OptimizationResult, maximize_chsh, sweep
from .states import combined_state, make_state

__all__ = [
    "RadialIntegrals", "MeasurementSettings", "chsh", "correlator", "build_configuration",
    "OptimizationResult", "maximize_chsh", "sweep", "combined_state", "make_state",
]
__version__ = "0.1.0"
