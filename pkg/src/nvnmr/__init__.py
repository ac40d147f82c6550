"""nvnmr: simulation and estimation workbench for optically detected 14N
nuclear spin transitions in NV-center ensembles.

Submodules
----------
spinmodel   spin-1 operators, 9-level electron-nuclear Hamiltonian, eigensolver
effective   second-order effective nuclear theory of the m_S = 0 manifold
pulses      ODNMR / Rabi / Ramsey protocol simulation on the nuclear manifold
readout     nuclear-spin-dependent fluorescence and ESLAC pumping rate model
fitting     Levenberg-Marquardt engine and spectroscopy model library
analysis    field/temperature pipelines, field calibration, sensitivity
dataio      CSV/JSON formats, workbench configuration
cli         command-line front end (simulate / fit / calc / generate)
"""

from .analysis import (DModel, FieldSeries, QPolynomial, RatioStats,
                       TemperatureSeries, analyze_field_series,
                       analyze_temperature_series, calibrate_field,
                       fractional_shift_ratio, sensitivity)
from .dataio import WorkbenchConfig
from .effective import (EffectiveNuclearParams, TransitionPair,
                        ValidityDomainError, effective_gyromagnetic_ratio,
                        effective_params, mean_transition_frequency,
                        transition_frequencies)
from .fitting import (FitModel, FitResult, decaying_sinusoid_model,
                      estimate_init, fit_lorentzian_comb, fit_nonlinear,
                      lorentzian_comb_model, lorentzian_peak_model)
from .pulses import (DecoherenceParams, PulseSegment, Trace, evolve_drive,
                     evolve_free, simulate_odnmr, simulate_rabi,
                     simulate_ramsey)
from .readout import (ESLACRateParams, ReadoutModel, excited_state_mixing,
                      fluorescence_trace, pump_steady_state)
from .spinmodel import (EigenDecomposition, SpinOperatorSet, SpinParameters,
                        StateLabel, build_ground_hamiltonian,
                        build_hamiltonian, build_spin_operators, eigensolve,
                        label_states)

__version__ = "0.1.0"
