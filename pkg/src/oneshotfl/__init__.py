"""One-shot federated learning with kernel SVMs, ensembles and distillation."""

from .distill import DistilledModel, ProxySet, distill, distill_objective, sample_proxy, soft_labels
from .feddata import (
    DeviceDataset,
    FederatedDataset,
    LabeledSet,
    load_csv,
    pool_train,
    split,
    synth_federated,
    write_csv,
)
from .kernel import KernelParams, gram, median_heuristic, rbf
from .localmodel import (
    ConstantModel,
    LocalModel,
    SvmModel,
    TrainingConfig,
    decision,
    duality_gap,
    train_constant,
    train_local,
    train_svm,
)
from .metrics import auc, auc_bruteforce, evaluate_per_device, fraction_of_ideal, relative_gain, summarize
from .selection import (
    Ensemble,
    SelectionPolicy,
    comm_cost,
    eligible,
    ensemble_predict,
    select_cv,
    select_data,
    select_random,
)

__version__ = "0.1.0"
