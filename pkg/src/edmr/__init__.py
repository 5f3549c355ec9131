"""Simulation of pulsed electrically detected magnetic resonance on donor/defect spin pairs."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    ConsistencyError,
    DegenerateStateError,
    EDMRError,
    NoPeakError,
    ParameterError,
    RangeError,
    SteadyStateError,
    UsageError,
)
from .spinsys import (  # noqa: E402
    CONSTANTS,
    SpinPairConfig,
    build_rotating_hamiltonian,
    donor_resonance_field,
    gyromagnetic,
    larmor,
    resonance_field,
)
from .dynamics import (  # noqa: E402
    PROJECTORS,
    PulseSpec,
    apply_pulse,
    nutation_trace,
    pulse_propagator,
    rabi_frequency,
    singlet_content,
)
from .recombination import (  # noqa: E402
    RecombinationRates,
    TransientTrace,
    liouville_step,
    steady_state,
    transient_current,
)
from .sigproc import BoxcarWindow, boxcar_charge, fft_of_Q, peak_frequency  # noqa: E402
from .experiments import (  # noqa: E402
    EnsembleSpec,
    SweepResult,
    TransientGrid,
    resonant_config,
    run_detuning_map,
    run_field_sweep,
    run_nutation,
    run_rabi_series,
    run_transient,
)
from .svg import emit_plot  # noqa: E402
