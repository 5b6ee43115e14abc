"""Evidential fusion of normal-inverse-gamma predictions for multitask quality scoring."""

from .errors import DivergenceError, DomainError, InvalidInputError
from .evidential import evidential_grad, evidential_loss, nll_loss, reg_loss
from .fusion import (Batch, FusionConfig, cross_region_loss, cross_region_params,
                     local_global_loss, local_global_params, overall_loss)
from .joint import (EvidenceProjection, ViewSet, distortion_marginal, joint_softmax,
                    quality_expectation, quality_marginal, scene_marginal, task_evidence)
from .metrics import MetricsReport, evaluate, normality_diag, plcc, srcc
from .multitask import (LossReport, TaskWeights, distortion_loss, dwa_update, fidelity,
                        multitask_loss, quality_pair_loss, scene_loss, thurstone_prob)
from .nig import (NIGParams, aleatoric, constrain, epistemic, nig_average, nig_fuse,
                  nig_fuse_n, predictive_interval)
from .scorer import TinyScorer, load_scorer, save_scorer, scorer_forward
from .synth import Dataset, Sample, SynthConfig, generate_dataset
from .train import TrainConfig, train

__version__ = "0.1.0"
