"""Periodic graph Schrodinger operators, Floquet fibers, and finite-size
quantum ergodicity checks."""

__version__ = "0.1.0"

from .lattice import (FiniteGraph, GraphValidationError, PeriodicGraph,
                      build_preset, cartesian_product, cycle_graph, decorate,
                      load_graph_spec, path_graph, preset_catalog,
                      save_graph_spec, single_vertex, strong_product,
                      tensor_product, validate)
from .floquet import (CapExceededError, EigenSystem, Fiber, band_table,
                      eigensystem, fiber, flat_band_scan, floquet_transform,
                      inverse_floquet_transform, verify_block_diagonalization)
from .finite import (BlochFunction, Eigenbasis, FiniteGraphModel,
                     FiniteOperator, bloch_eigenfunction, dense_eigenbasis,
                     embed_in_eigenbasis, export_eigenbasis, fiber_eigenbasis,
                     hamiltonian)
from .ergodicity import (Observable, Symbol, VarianceReport, egorov_symbols,
                         exact_time_average, matrix_average,
                         multiplication_symbol, qe_variance, quantize,
                         que_sup, weighted_average)
from .assumption import (CoincidenceReport, RootBoundCertificate,
                         assumption_sweep, charpoly_split_check,
                         coincidence_count, coincidence_report,
                         kronecker_probe, nu1_root_bound)
from .scenarios import REGISTRY as SCENARIOS, run_scenario
