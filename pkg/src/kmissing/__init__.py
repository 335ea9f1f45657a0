"""Kernel machines for data with missing responses.

Complete-case, inverse-propensity weighted and doubly-robust quadratic-loss
kernel machines, the four benchmark simulation settings and a replication
harness.
"""

from .data import ColumnTransform, Dataset, apply_transforms, load_csv, save_csv, split
from .kernels import KernelSpec, eval_kernel, gram, median_bandwidth
from .machines import (
    KernelMachine,
    dr_empirical_risk,
    fit_cc,
    fit_dr,
    fit_wcc,
    load_machine,
    predict,
    save_machine,
    select_lambda,
    weighted_empirical_risk,
)
from .outcome import (
    BasisSpec,
    OutcomeFit,
    fit_classification_outcome,
    fit_regression_outcome,
    h_hat,
    mu_vector,
)
from .propensity import KnownPropensity, PropensityFit, fit_glm, predict_pi
from .simulate import SettingSpec, generate, generate_test, true_pi

__version__ = "0.1.0"
