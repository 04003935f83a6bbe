"""Dynamic sparse training engine for spiking neural networks.

Pipeline stages: correlation-seeded sparse topology, sparsity-aware Gaussian
weight initialization, probabilistic link pruning with cascade removal of
disconnected neurons, and length-3 path link regrowth; plus LIF simulation,
surrogate-gradient training, spike encoding, and energy accounting.
"""

from .config import RunConfig, load_config, parse_config_text
from .data import (LabeledDataset, bernoulli_encode, load_idx,
                   load_spike_tensor, save_spike_tensor,
                   synthetic_correlated_spikes)
from .errors import (CheckpointError, ConfigError, DataFormatError,
                     PercolationError, SparseSpikeError)
from .evolution import (EvolutionReport, LinkScoreTable, RegrowthScoreTable,
                        chain_removal, evolve_epoch, l3_scores,
                        link_removal_scores, prune_schedule, sample_regrowth,
                        sample_removals)
from .masks import SparseLayer, SparseMask, load_layer, masked_matvec, save_layer
from .metrics import (EnergyReport, MetricsAccumulator, count_sops, energy,
                      firing_rate, link_sparsity, node_sparsity)
from .network import (ForwardTrace, SnnNetwork, evaluate, forward,
                      load_network, loss_and_grads, save_network, train_step)
from .neuron import LifState, SurrogateSpec, lif_step, soft_spike, surrogate_grad
from .topology import (CorrelationMatrix, balanced_random_mask,
                       correlation_mask, phi_matrix)
from .weightinit import (WeightInitParams, init_layer_weights, kaiming_init,
                         temporal_sparsity, weight_variance)

__version__ = "0.1.0"
