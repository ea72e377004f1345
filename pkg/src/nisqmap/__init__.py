"""Multi-program qubit mapping for noisy quantum devices."""
from .circuit import Circuit, Gate, QasmError, build_dag, layer_cnots, load_circuit, parse_circuit, to_qasm
from .device import DeviceError, DeviceModel, gen_calibration, gen_lattice, load_device, save_device, topology
from .profiler import Profile, profile_circuit

__version__ = "0.1.0"

__all__ = [
    "Circuit", "Gate", "QasmError", "build_dag", "layer_cnots", "load_circuit", "parse_circuit",
    "to_qasm", "DeviceError", "DeviceModel", "gen_calibration", "gen_lattice", "load_device",
    "save_device", "topology", "Profile", "profile_circuit", "__version__",
]
