"""pipeforge: a plugin-based preprocessing pipeline engine for keyword-spotting
experiments.

The package splits into a handful of layers:

- manifests and the plugin registry (``manifest``, ``registry``, ``external``)
- pipeline specs, validation, and fingerprints (``pipeline``)
- signal-processing kernels and built-in transforms (``dsp``, ``builtins``)
- dataset ingestion, splitting, and rebalancing (``dataset``, ``data``)
- the execution engine and seeding discipline (``engine``, ``seeding``)
- the linear probe and its metrics (``probe``, ``metrics``)
- run tracking, sweeps, and comparison (``tracker``, ``runner``)
- the CLI and HTTP service (``cli``, ``service``)
"""

from .data import AudioClip, Batch, Dataset, FeatureTensor, SampleRecord
from .dataset import (
    ClassMap,
    SplitConfig,
    apply_class_map,
    apply_split,
    build_class_map,
    dataset_digest,
    ingest_dataset,
    rebalance,
)
from .engine import ExecutionReport, SeedPolicy, iterate_batches, run_pipeline
from .errors import PipeforgeError
from .manifest import PluginManifest, parse_manifest, validate_params
from .pipeline import (
    PipelineSpec,
    ValidatedPipeline,
    fingerprint,
    move_transform,
    parse_pipeline,
    pipeline_from_dict,
    pipeline_to_dict,
    serialize_pipeline,
    validate_pipeline,
)
from .probe import ProbeModel, TrainConfig, evaluate, train_probe
from .registry import Registry, load_registry
from .runner import RunConfig, execute_run, export_features
from .seeding import derive_seed, rng_from_seed
from .tracker import RunStore, compare, expand_sweep

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "Batch",
    "ClassMap",
    "Dataset",
    "ExecutionReport",
    "FeatureTensor",
    "PipelineSpec",
    "PipeforgeError",
    "PluginManifest",
    "ProbeModel",
    "Registry",
    "RunConfig",
    "RunStore",
    "SampleRecord",
    "SeedPolicy",
    "SplitConfig",
    "TrainConfig",
    "ValidatedPipeline",
    "apply_class_map",
    "apply_split",
    "build_class_map",
    "compare",
    "dataset_digest",
    "derive_seed",
    "evaluate",
    "execute_run",
    "expand_sweep",
    "export_features",
    "fingerprint",
    "ingest_dataset",
    "iterate_batches",
    "load_registry",
    "move_transform",
    "parse_manifest",
    "parse_pipeline",
    "pipeline_from_dict",
    "pipeline_to_dict",
    "rebalance",
    "rng_from_seed",
    "run_pipeline",
    "serialize_pipeline",
    "train_probe",
    "validate_params",
    "validate_pipeline",
    "__version__",
]
