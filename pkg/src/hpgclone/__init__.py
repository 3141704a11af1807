"""Markov models of web navigation sessions with dynamic clustering-based state cloning."""

from .cloning import (CloneConfig, CloneReport, InLinkPartition, SecondOrderVector,
                      apply_dynamic_clustering, clone_state, cloning_eligible, in_link_vectors,
                      kmeans_partition, partition_is_accurate)
from .estimators import DynamicClusteringHPG, FirstOrderHPG, NGramHPG
from .model import (FINAL_STATE, START_STATE, HpgModel, StateId, build_first_order,
                    enumerate_trails, model_is_accurate, second_order_prob, state_is_accurate,
                    trail_probability)
from .ngram import NGramModel, build_ngram, dropped_sessions, theoretical_drop_fraction
from .serialize import export_model, import_model
from .sessions import NGramTable, SessionLog, count_ngrams, dataset_stats, parse_sessions
from .synth import (SessionGenConfig, TopologyConfig, generate_sessions, generate_topology,
                    pagerank, sample_power_law)

__version__ = "0.1.0"
