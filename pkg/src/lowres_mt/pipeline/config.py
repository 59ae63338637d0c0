"""Experiment configuration: a single JSON document describing an experiment.

Sections: `languages`, `corpora`, `stages`, `bt`, `eval`, `seed`, and an
optional `model` section for architecture dimensions. Corpus paths are
resolved relative to the config file's directory. Parsing is strict:
unknown keys anywhere are rejected so typos fail loudly instead of being
silently ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..corpus import parse_direction
from ..errors import ConfigError, DataError
from ..nmt import TrainSchedule
from .store import derive_seed

DOMAINS = ("in", "out", "pseudo")
STRATEGIES = ("scratch", "fine_tune", "mixed_fine_tune")
BT_MODES = ("scratch", "finetune")


def _check_keys(doc: dict, allowed, required, context: str) -> None:
    if not isinstance(doc, dict):
        raise ConfigError(f"{context}: expected an object, got {type(doc).__name__}")
    unknown = set(doc) - set(allowed)
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")
    missing = set(required) - set(doc)
    if missing:
        raise ConfigError(f"{context}: missing keys {sorted(missing)}")


@dataclass(frozen=True)
class CorpusSpec:
    name: str
    kind: str
    domain: str
    src_lang: str = ""
    tgt_lang: str = ""
    src_path: str = ""
    tgt_path: str = ""
    lang: str = ""
    path: str = ""

    def languages(self) -> frozenset:
        if self.kind == "parallel":
            return frozenset((self.src_lang, self.tgt_lang))
        return frozenset((self.lang,))


@dataclass(frozen=True)
class StageSpec:
    stage_id: str
    init_from: str | None
    data: tuple
    strategy: str
    schedule: TrainSchedule

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"stage {self.stage_id!r}: unknown strategy {self.strategy!r}")
        if self.strategy != "scratch" and not self.init_from:
            raise ConfigError(f"stage {self.stage_id!r}: {self.strategy} requires init_from")
        if not self.data:
            raise ConfigError(f"stage {self.stage_id!r}: data must be non-empty")
        for entry in self.data:
            direction, corpus, tag = entry
            parse_direction(direction)
            if tag not in DOMAINS:
                raise ConfigError(
                    f"stage {self.stage_id!r}: domain tag {tag!r} not in {DOMAINS}"
                )
        if self.strategy == "mixed_fine_tune":
            tags = {tag for _, _, tag in self.data}
            pairs = {frozenset(parse_direction(d)) for d, _, _ in self.data}
            if len(tags) < 2 and len(pairs) < 2:
                raise ConfigError(
                    f"stage {self.stage_id!r}: mixed_fine_tune needs at least two "
                    f"domain tags or two language pairs"
                )


@dataclass(frozen=True)
class SelectionSpec:
    mono: str
    t: int
    order: int = 3

    def __post_init__(self):
        if self.t < 1:
            raise ConfigError(f"selection size must be >= 1, got {self.t}")
        if not 1 <= self.order <= 6:
            raise ConfigError(f"selection LM order must be in 1..6, got {self.order}")


@dataclass(frozen=True)
class BTConfig:
    rounds: int
    mode: str
    directions: tuple
    selection: dict
    schedule: TrainSchedule
    reselect: bool = False

    def __post_init__(self):
        if self.rounds < 0:
            raise ConfigError(f"bt rounds must be >= 0, got {self.rounds}")
        if self.mode not in BT_MODES:
            raise ConfigError(f"bt mode must be one of {BT_MODES}, got {self.mode!r}")
        if not self.directions:
            raise ConfigError("bt needs at least one direction")
        for d in self.directions:
            parse_direction(d)
        for _, y in map(parse_direction, self.directions):
            if y not in self.selection:
                raise ConfigError(f"bt: no selection entry for target language {y!r}")


@dataclass(frozen=True)
class EvalSpec:
    dev: dict
    test: dict = field(default_factory=dict)
    beam: int = 1
    alpha: float = 0.0

    def __post_init__(self):
        if not self.dev:
            raise ConfigError("eval.dev must bind at least one direction")
        for d in list(self.dev) + list(self.test):
            parse_direction(d)
        if self.beam < 1:
            raise ConfigError(f"eval beam must be >= 1, got {self.beam}")


@dataclass(frozen=True)
class ModelDims:
    embed_dim: int = 64
    hidden_dim: int = 64
    max_decode_len: int = 0
    vocab_size: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    languages: tuple
    corpora: dict
    stages: tuple
    bt: BTConfig | None
    eval: EvalSpec
    seed: int
    model: ModelDims = ModelDims()


def _parse_schedule(doc, default_seed: int, context: str) -> TrainSchedule:
    allowed = ("eval_every", "patience", "batch_size", "learning_rate", "max_updates", "seed")
    _check_keys(doc, allowed, (), context)
    fields = dict(doc)
    fields.setdefault("seed", default_seed)
    return TrainSchedule(**fields)


def _parse_corpus(name: str, doc) -> CorpusSpec:
    context = f"corpora[{name!r}]"
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "parallel":
        _check_keys(doc, ("kind", "src_lang", "tgt_lang", "src", "tgt", "domain"),
                    ("kind", "src_lang", "tgt_lang", "src", "tgt", "domain"), context)
        return CorpusSpec(name, "parallel", doc["domain"],
                          src_lang=doc["src_lang"], tgt_lang=doc["tgt_lang"],
                          src_path=doc["src"], tgt_path=doc["tgt"])
    if kind == "monolingual":
        _check_keys(doc, ("kind", "lang", "path", "domain"),
                    ("kind", "lang", "path", "domain"), context)
        return CorpusSpec(name, "monolingual", doc["domain"],
                          lang=doc["lang"], path=doc["path"])
    raise ConfigError(f"{context}: kind must be 'parallel' or 'monolingual'")


def _parse_stage(doc, seed: int, context: str) -> StageSpec:
    _check_keys(doc, ("stage_id", "init_from", "strategy", "data", "schedule"),
                ("stage_id", "strategy", "data", "schedule"), context)
    stage_id = doc["stage_id"]
    data = []
    for i, entry in enumerate(doc["data"]):
        if not (isinstance(entry, (list, tuple)) and len(entry) == 3):
            raise ConfigError(f"{context}: data[{i}] must be [direction, corpus, domain]")
        data.append(tuple(entry))
    schedule = _parse_schedule(doc["schedule"], derive_seed(seed, "train", stage_id),
                               f"{context}.schedule")
    return StageSpec(stage_id, doc.get("init_from"), tuple(data), doc["strategy"], schedule)


def _parse_bt(doc, seed: int) -> BTConfig:
    _check_keys(doc, ("rounds", "mode", "directions", "selection", "schedule", "reselect"),
                ("rounds", "mode", "directions", "selection", "schedule"), "bt")
    if not isinstance(doc["selection"], dict):
        raise ConfigError("bt.selection: expected an object keyed by language")
    selection = {}
    for lang, entry in doc["selection"].items():
        _check_keys(entry, ("mono", "t", "order"), ("mono", "t"), f"bt.selection[{lang!r}]")
        selection[lang] = SelectionSpec(**entry)
    schedule = _parse_schedule(doc["schedule"], derive_seed(seed, "bt", "train"), "bt.schedule")
    return BTConfig(doc["rounds"], doc["mode"], tuple(doc["directions"]),
                    selection, schedule, doc.get("reselect", False))


def _parse_eval(doc) -> EvalSpec:
    _check_keys(doc, ("dev", "test", "beam", "alpha"), ("dev",), "eval")
    for key in ("dev", "test"):
        if key in doc and not isinstance(doc[key], dict):
            raise ConfigError(f"eval.{key}: expected an object mapping direction to corpus")
    return EvalSpec(dict(doc["dev"]), dict(doc.get("test", {})),
                    doc.get("beam", 1), doc.get("alpha", 0.0))


def _parse_model(doc) -> ModelDims:
    _check_keys(doc, ("embed_dim", "hidden_dim", "max_decode_len", "vocab_size"), (), "model")
    return ModelDims(**doc)


def _resolve_path(base: Path, p: str) -> str:
    path = Path(p)
    return str(path if path.is_absolute() else base / path)


def _check_direction_corpus(direction: str, spec: CorpusSpec, context: str) -> None:
    pair = frozenset(parse_direction(direction))
    if spec.kind != "parallel":
        raise ConfigError(f"{context}: corpus {spec.name!r} is not parallel")
    if pair != spec.languages():
        raise ConfigError(
            f"{context}: direction {direction!r} does not match corpus "
            f"{spec.name!r} languages {sorted(spec.languages())}"
        )


def parse_experiment(doc: dict, base_dir=".") -> ExperimentConfig:
    _check_keys(doc, ("languages", "corpora", "stages", "bt", "eval", "seed", "model"),
                ("languages", "corpora", "stages", "eval", "seed"), "experiment")
    if not isinstance(doc["corpora"], dict):
        raise ConfigError("corpora: expected an object keyed by corpus name")
    if not isinstance(doc["stages"], list):
        raise ConfigError("stages: expected a list")
    if not isinstance(doc["languages"], list) or not all(
        isinstance(lang, str) for lang in doc["languages"]
    ):
        raise ConfigError("languages: expected a list of language codes")
    languages = tuple(sorted(set(doc["languages"])))
    if len(languages) < 2:
        raise ConfigError("an experiment needs at least two languages")
    seed = doc["seed"]
    if not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    base = Path(base_dir)

    corpora = {}
    for name, entry in doc["corpora"].items():
        spec = _parse_corpus(name, entry)
        if spec.domain not in DOMAINS:
            raise ConfigError(f"corpora[{name!r}]: domain {spec.domain!r} not in {DOMAINS}")
        if not spec.languages() <= set(languages):
            raise ConfigError(
                f"corpora[{name!r}]: languages {sorted(spec.languages())} outside "
                f"the experiment's {list(languages)}"
            )
        if spec.kind == "parallel":
            spec = CorpusSpec(name, "parallel", spec.domain,
                              src_lang=spec.src_lang, tgt_lang=spec.tgt_lang,
                              src_path=_resolve_path(base, spec.src_path),
                              tgt_path=_resolve_path(base, spec.tgt_path))
        else:
            spec = CorpusSpec(name, "monolingual", spec.domain,
                              lang=spec.lang, path=_resolve_path(base, spec.path))
        corpora[name] = spec

    def lookup(name: str, context: str) -> CorpusSpec:
        if name not in corpora:
            raise ConfigError(f"{context}: unknown corpus {name!r}")
        return corpora[name]

    stages = []
    seen_ids = set()
    for i, entry in enumerate(doc["stages"]):
        stage = _parse_stage(entry, seed, f"stages[{i}]")
        if stage.stage_id in seen_ids:
            raise ConfigError(f"duplicate stage_id {stage.stage_id!r}")
        # a stage may only initialize from an earlier stage (or a store
        # artifact id, resolved at run time), so the graph stays acyclic
        if stage.init_from == stage.stage_id:
            raise ConfigError(f"stage {stage.stage_id!r} cannot initialize from itself")
        for direction, name, tag in stage.data:
            spec = lookup(name, f"stage {stage.stage_id!r}")
            _check_direction_corpus(direction, spec, f"stage {stage.stage_id!r}")
            if spec.domain != tag:
                raise ConfigError(
                    f"stage {stage.stage_id!r}: data entry tags {name!r} as "
                    f"{tag!r} but the registry says {spec.domain!r}"
                )
        seen_ids.add(stage.stage_id)
        stages.append(stage)
    later = set()
    for stage in reversed(stages):
        if stage.init_from in later:
            raise ConfigError(
                f"stage {stage.stage_id!r} initializes from later stage {stage.init_from!r}"
            )
        later.add(stage.stage_id)

    eval_spec = _parse_eval(doc["eval"])
    for direction, name in list(eval_spec.dev.items()) + list(eval_spec.test.items()):
        _check_direction_corpus(direction, lookup(name, "eval"), "eval")

    bt = None
    if "bt" in doc:
        bt = _parse_bt(doc["bt"], seed)
        for d in bt.directions:
            for lang in parse_direction(d):
                if lang not in languages:
                    raise ConfigError(f"bt direction {d!r} uses unknown language {lang!r}")
        for lang, sel in bt.selection.items():
            spec = lookup(sel.mono, f"bt.selection[{lang!r}]")
            if spec.kind != "monolingual" or spec.lang != lang:
                raise ConfigError(
                    f"bt.selection[{lang!r}]: corpus {sel.mono!r} is not "
                    f"monolingual {lang!r} text"
                )

    model = _parse_model(doc.get("model", {}))
    return ExperimentConfig(languages, corpora, tuple(stages), bt, eval_spec, seed, model)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: invalid JSON ({e})") from e
    return parse_experiment(doc, base_dir=path.parent)
