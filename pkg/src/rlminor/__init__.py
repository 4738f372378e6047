"""Minor embedding of problem graphs onto quantum-annealer topologies,
learned with PPO and benchmarked against a randomized shortest-path heuristic."""

from .baseline import BaselineConfig, BaselineResult, heuristic_embed
from .embedding import (
    EmbeddedIsing,
    Embedding,
    embed_parameters,
    ising_energy,
    qubit_count,
    validate_embedding,
)
from .environment import EmbeddingEnv, ObsLayout, StepOutcome
from .evaluation import EvalRecord, RunConfig, evaluate, qubit_efficiency_ratio, success_rate
from .ppo import Hyperparams, PolicyNet, ValueNet, load_checkpoint, save_checkpoint, train
from .problems import DatasetManifest, ProblemGraph, build_dataset, complete_graph, load_dataset
from .topology import HardwareGraph, build_chimera, build_hardware, build_zephyr

__version__ = "0.1.0"
