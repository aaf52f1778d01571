"""Desk-scale laboratory for label noise induced by adversarial data augmentation."""

__version__ = "0.1.0"

from .attacks import AdvExample, AttackConfig, fgsm, pgd, pgd_batch, project
from .data import (
    GaussianMixtureOracle,
    MixupConfig,
    OracleDataset,
    build_fixed_adversarial,
    build_gaussian_augmented,
    gen_gaussian_mixture,
    load_csv,
    mixup_once,
    save_csv,
)
from .errors import NumericError, ParameterError, ParseError, ShapeError
from .labels import (
    NoiseReport,
    RectifierParams,
    data_quality,
    label_error_rate,
    mismatch_report,
    one_hot,
    rectify,
    tv_distance,
)
from .linalg import Rng, matmul, sample_gaussian
from .net import (
    GradBundle,
    Network,
    NetworkSpec,
    backward,
    forward,
    load_checkpoint,
    loss_soft_ce,
    save_checkpoint,
    softmax_t,
)
