"""Margin-distribution classifiers: SVM, ODM-L and ODM variants with
kernelized dual coordinate descent and primal SVRG trainers."""

from .analysis import (
    LooBoundReport,
    MarginReport,
    loo_bound,
    loo_bound_odm,
    loo_bound_odml,
    loo_exact,
    margin_report,
    write_margin_curve,
)
from .boxqp import (
    BoxQpProblem,
    QpSolution,
    SolverOptions,
    UnboundedProblemError,
    coordinate_update,
    dcd_solve,
    qp_objective,
)
from .data import (
    Dataset,
    Normalizer,
    ParseError,
    SparseVector,
    apply_normalizer,
    augment_constant,
    fit_normalizer,
    kfold,
    parse_libsvm,
    parse_unlabeled,
    split,
    to_libsvm,
)
from .duals import (
    OdmlParams,
    OdmParams,
    SvmParams,
    TrainedModel,
    build_odm_dual,
    build_odml_dual,
    build_svm_dual,
    decision_function,
    predict,
    predict_labels,
    recover_theta_odm,
    recover_theta_odml,
    train_kernel,
)
from .kernels import (
    KernelSpec,
    LinearSolveError,
    OdmlDualMatrix,
    avg_pairwise_distance,
    build_odml_dual_matrix,
    cross_gram,
    gram,
    kernel_eval,
    solve_linear_system,
)
from .linear import (
    LinearModel,
    SvrgOptions,
    decision_function_linear,
    full_gradient_odm,
    full_gradient_odml,
    objective_odm_linear,
    objective_odml_linear,
    predict_linear,
    stoch_grad_odm,
    stoch_grad_odml,
    svrg_train,
)
from .model_io import ModelFormatError, load_model, save_model

__version__ = "0.1.0"
