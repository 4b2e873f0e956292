"""TSTMR: two-step iterative solvers with a two-dimensional
minimum-residual acceleration, plus baselines, splittings, augmented-system
machinery for Tikhonov-regularized ill-posed problems, test-problem
generators and an experiment CLI."""

from ._kernels import BACKEND as kernel_backend
from .linalg import (Gram2, GramSingular, SingularMatrix, SparseMatrix,
                     dense_lu_solve, gram2_solve, lanczos_extreme, power_norm,
                     split_hs, spmv, spmv_t, sym_eigs_dense)
from .operators import LinearOperator, as_operator
from .splittings import (IncompleteFactor, SplittingPair, SubSolver, eta_star,
                         hss_pair, ic0, ilu0, make_inner_subsolver,
                         shifted_skew_pair, wellposed_pair)
from .solvers import (SolveOptions, SolveReport, StoppingRule, cgls_solve,
                      cgw_solve, contraction_diagnostics, discrepancy_stop,
                      gmres_solve, hss_solve, pcg_solve,
                      stationary_two_step_solve, tstmr_solve,
                      two_step_1d_mr_solve)
from .illposed import (AugmentedSystem, FovInterval, GaussianRelative,
                       MshssParams, UniformAbsolute, add_noise,
                       build_nonregularized_split, build_regularized_split,
                       check_gamma_condition, cgw_on_augmented,
                       fov_bound_interval, fov_numeric_imag_halfwidth,
                       fov_numeric_real_extremes, gamma_star, gcv_select_mu,
                       hk_inv_apply, k_apply, mshss_alpha_star, mshss_solve,
                       omega_skew_solve, tikhonov_direct)
from .problems import (GrayImage, Problem, convdiff2d, foxgood, gravity,
                       image_blur_operator, mblur, phillips, psnr, read_pgm,
                       synthetic_image, write_pgm)
from .diagnostics import (check_remark24, per_step_contraction_bounds,
                          validate_monotone_chain)
from .mmio import read_matrix_market, write_matrix_market

__version__ = "0.1.0"
