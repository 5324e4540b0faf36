"""Computable two-weight fractional singular-integral objects on discrete
measure pairs: quasicube grids, weighted Haar bases, Poisson-type testing
constants, energy functionals, truncated vector kernels, stopping-time
coronas, and functional-energy integrals, with a scenario-driven check
runner."""

from .measure import (CommonPointSet, DiscreteMeasure, common_point_masses,
                      cube_mass, greedy_depoint, punctured_mass,
                      remove_largest_common_atom)
from .quasigeom import (BiLipschitzMap, DeepFamily, DyadicQuasigrid,
                        GoodnessParams, QuasiCube, alternate_quasicubes,
                        is_deeply_embedded, is_good, make_map,
                        maximal_deep_subcubes)
from .haar import HaarSystem, build_haar_basis, telescoping_check
from .poisson import (FracParams, MuckenhouptReport, energy_A2,
                      muckenhoupt_report, offset_A2, one_tailed_A2,
                      plugged_energy_A2, poisson_m_weighted,
                      poisson_reproducing, poisson_standard, punctured_A2)
from .energy import (EnergyEvaluator, MomentSpectrum, energy,
                     is_k_energy_dispersed, mk_bruteforce, moment_spectrum,
                     stopping_energy, strong_energy_constant)
from .riesz import (OperatorMatrix, TruncationProfile, apply_truncated,
                    default_lattice, energy_reversal_check,
                    kernel_ellipticity_check, monotonicity_functional,
                    norm_constant, operator_norm, reversal_admissible,
                    riesz_field, riesz_gradient, riesz_kernel,
                    semiharmonic_laplacian, testing_constant,
                    truncation_constant, weak_boundedness)
from .corona import (StoppingForest, carleson_check, corona_projection,
                     cz_stopping, energy_corona, iterate_coronas,
                     quasi_orthogonality_check, validate_stopping_data)
from .funcenergy import (UpperMeasure, backward_testing, build_upper_measure,
                         dual_poisson, forward_testing, functional_energy,
                         poisson_extension, refined_term, tau_overlap_count)
from .corpus import GENERATORS, generate_corpus
from .report import CheckResult, SuiteReport
from .cli import Scenario, load_scenario, run_scenario

__version__ = "0.1.0"
