"""Declarative experiment orchestration and the content-addressed artifact store."""

from .config import (
    BTConfig,
    CorpusSpec,
    EvalSpec,
    ExperimentConfig,
    ModelDims,
    SelectionSpec,
    StageSpec,
    load_config,
    parse_experiment,
)
from .report import score_figure_bytes, tsv_bytes, write_score_figure, write_tsv
from .stages import (
    AVERAGE_LAST,
    REPORT_HEADER,
    ExperimentContext,
    ExperimentResult,
    GridPoint,
    GridResult,
    back_translate,
    bt_iterate,
    evaluate_artifact,
    grid_search,
    prepare,
    run_experiment,
    run_multistage,
    run_stage,
    select_monolingual,
)
from .store import (
    ArtifactStore,
    artifact_id,
    canonical_json,
    derive_seed,
    load_model_artifact,
    model_files,
    short_hash,
    store_model,
    store_monolingual,
    store_parallel,
)
from .translators import (
    IdentityTranslator,
    NeuralTranslator,
    PhraseTranslator,
    Translator,
    pivot_cascade,
    pivot_synthesize,
)

__all__ = [
    "AVERAGE_LAST",
    "ArtifactStore",
    "BTConfig",
    "CorpusSpec",
    "EvalSpec",
    "ExperimentConfig",
    "ExperimentContext",
    "ExperimentResult",
    "GridPoint",
    "GridResult",
    "IdentityTranslator",
    "ModelDims",
    "NeuralTranslator",
    "PhraseTranslator",
    "REPORT_HEADER",
    "SelectionSpec",
    "StageSpec",
    "Translator",
    "artifact_id",
    "back_translate",
    "bt_iterate",
    "canonical_json",
    "derive_seed",
    "evaluate_artifact",
    "grid_search",
    "load_config",
    "load_model_artifact",
    "model_files",
    "parse_experiment",
    "pivot_cascade",
    "pivot_synthesize",
    "prepare",
    "run_experiment",
    "run_multistage",
    "run_stage",
    "score_figure_bytes",
    "select_monolingual",
    "short_hash",
    "store_model",
    "store_monolingual",
    "store_parallel",
    "tsv_bytes",
    "write_score_figure",
    "write_tsv",
]
