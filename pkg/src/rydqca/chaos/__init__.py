"""Chaos diagnostics: tetrahedral sampling of ``g^O(t)`` and exact oracles."""

from .clifford import CliffordResult, PauliString, clifford_pauli_weight, light_cone_sizes
from .oracles import (SizeDistribution, exact_g_series, exact_size_distribution, g_enumeration,
                      g_from_sizes, g_moment_contraction, heisenberg_operator, pauli_coefficients,
                      random_operator_sizes, size_distribution_of)
from .prep import PrepResult, prep_program, simulate_prep_protocol, step_unitaries
from .sampling import (Coloring, GEstimate, Observable, estimate_g, product_state, sample_coloring,
                       sample_initial_state)
from .tetra import (MomentComparison, TETRA_STATES, bloch_vector, haar_moment, preparation_unitary,
                    tetra_moment_closed_form, tetra_moment_direct, tetra_moments, tetra_state)

__all__ = [
    "CliffordResult", "Coloring", "GEstimate", "MomentComparison", "Observable", "PauliString",
    "PrepResult", "SizeDistribution", "TETRA_STATES", "bloch_vector", "clifford_pauli_weight",
    "estimate_g", "exact_g_series", "exact_size_distribution", "g_enumeration", "g_from_sizes",
    "g_moment_contraction", "haar_moment", "heisenberg_operator", "light_cone_sizes",
    "pauli_coefficients", "prep_program", "preparation_unitary", "product_state",
    "random_operator_sizes", "sample_coloring", "sample_initial_state", "simulate_prep_protocol",
    "size_distribution_of", "step_unitaries", "tetra_moment_closed_form", "tetra_moment_direct",
    "tetra_moments", "tetra_state",
]
