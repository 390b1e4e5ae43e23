"""Grove-partitioned random forest inference with confidence-based
early exit, a deterministic grove-ring microarchitecture simulator, and
a parametric energy/latency cost model."""

from .costmodel import CostParams, OpTrace, edp, energy_of, load_cost_params, pe_latency_cycles
from .dataset import Dataset, FeatureScaler, SplitSpec, load_csv, minmax_normalize, split
from .fog import EvalConfig, EvalResult, accuracy, avg_hops, gc_eval, max_diff, start_grove_for
from .forest import (
    Budget,
    BudgetError,
    FieldOfGroves,
    Grove,
    GroveOutput,
    RandomForest,
    budget_rf_train,
    gc_train,
    load_field,
    save_field,
    split_forest,
)
from .simarch import DataQueue, QueueEntry, SimConfig, SimStats, gamma, simulate, verify_event_log
from .tree import CartTree, TreeNode, deserialize_tree, serialize_tree, train_cart

__version__ = "0.1.0"
