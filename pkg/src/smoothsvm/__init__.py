"""Smooth hinge loss SVM training toolkit.

Linear binary classifiers trained with infinitely differentiable hinge
approximations, solved by a matrix-free trust-region Newton method with
first-order baselines, plus LIBSVM-format data handling and a reproducible
experiment harness.
"""

from .data import (Dataset, SplitPlan, accuracy, kfold_split, parse_libsvm,
                   sparsity_metric, synthetic_dataset, write_libsvm)
from .errors import (DimensionMismatch, InvalidGenerator, NonDifferentiable,
                     NumericalBreakdown, OutOfDomain, ParseError, SmoothSvmError,
                     TooFewInstances, Unsupported, WrongLoss)
from .losses import (CurvatureCertificate, Family, GeneratorPair, LossSpec,
                     from_generator, generator_from_loss, make_loss,
                     validate_generator)
from .objective import Objective
from .solvers import (CgResult, CgStatus, InverseT, PegasosRate, SgdConfig,
                      TrainReport, TronConfig, XiFixed, XiGradientScaled,
                      cg_subproblem, fgd_train, pegasos_train, sgd_train,
                      tron_train, trust_region_update)
from .sparse import CsrMatrix, HessianOperator, hessian_vector_product, matvec, transpose_matvec

__all__ = [
    "CgResult", "CgStatus", "CsrMatrix", "CurvatureCertificate", "Dataset",
    "DimensionMismatch", "Family", "GeneratorPair", "HessianOperator",
    "InvalidGenerator", "InverseT", "LossSpec", "NonDifferentiable",
    "NumericalBreakdown", "Objective", "OutOfDomain", "ParseError",
    "PegasosRate", "SgdConfig", "SmoothSvmError", "SplitPlan", "TooFewInstances",
    "TrainReport", "TronConfig", "Unsupported", "WrongLoss", "XiFixed",
    "XiGradientScaled", "accuracy", "cg_subproblem", "fgd_train",
    "from_generator", "generator_from_loss", "hessian_vector_product",
    "kfold_split", "make_loss", "matvec", "parse_libsvm", "pegasos_train",
    "sgd_train", "sparsity_metric", "synthetic_dataset", "transpose_matvec",
    "tron_train", "trust_region_update", "validate_generator", "write_libsvm",
]

__version__ = "0.1.0"
