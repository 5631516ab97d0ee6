"""Energy-confusion regularized deep metric learning at desk scale.

A small laboratory for zero-shot retrieval/clustering: an MLP embedding
network with explicit backprop, three classic metric losses (triplet,
N-pair, binomial deviance), an adversarial energy-confusion regularizer,
the divergence machinery that bounds it (generalized energy distance,
MMD, distance-induced kernels), and a synthetic shortcut-feature benchmark
that reproduces the seen/unseen overfitting gap.
"""

from .confusion import (ClassGroup, EcConfig, confusion_penalty,
                        ecaml_objective, energy_confusion,
                        log_energy_confusion, select_class_pairs)
from .divergences import (Kernel, Semimetric, check_upper_bounds_ged,
                          check_upper_bounds_mmd,
                          distance_induced_kernel_gram, ged, mmd_sq,
                          negative_type_witness, semimetric_eval)
from .errors import ConfigError, SamplingError, TrainingDiverged
from .evaluation import (ClusteringReport, RetrievalReport, clustering_report,
                         kmeans, nmi, pairwise_f1, pairwise_sq_distances,
                         recall_at_k)
from .experiments import (RunHistory, TrainConfig, ablate_lambda,
                          embedding_size_sweep, train)
from .losses import (BinomialConfig, LossOutput, NPairConfig, NPairTuples,
                     TripletConfig, binomial_loss, npair_loss, softplus,
                     triplet_loss)
from .net import (AdamState, ForwardTrace, MlpConfig, MlpParams, adam_step,
                  backward, finite_diff_check, forward, init_adam,
                  init_params)
from .sampling import (Batch, BatchSpec, Dataset, build_contrastive_pairs,
                       build_npair_tuples, build_triplets, sample_batch)
from .synthetic import SynthConfig, generate, load_csv, save_csv

__version__ = "0.1.0"
