"""Stage execution, multistage schedules, back-translation rounds, grid search.

An experiment runs against an ExperimentContext: corpora loaded from disk, a
vocabulary frozen from the in-domain parallel data (so every stage transition
is shape-compatible by construction), and the model architecture. Artifacts
carry their full provenance: a trained model's parents are its initializer
and every corpus it consumed; a pseudo corpus's parent is the model that
generated it.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

from ..corpus import (
    UNK,
    MonolingualCorpus,
    ParallelCorpus,
    TrainingMixture,
    make_mixture,
    parse_direction,
    ingest_parallel,
    read_monolingual,
)
from ..errors import ConfigError, DataError, ToolkitError, TrainingError
from ..evaluate import BleuScore, bleu
from ..lm import train_ngram
from ..nmt import (
    DecodeConfig,
    ModelConfig,
    NeuralModel,
    Vocabulary,
    average_checkpoints,
    beam_decode,
    build_vocab,
    fine_tune,
    init_model,
    train,
)
from ..selection import SelectionConfig, moore_lewis_select
from .config import BTConfig, ExperimentConfig, StageSpec
from .report import score_figure_bytes, tsv_bytes
from .store import (
    ArtifactStore,
    derive_seed,
    load_model_artifact,
    store_model,
    store_monolingual,
    store_parallel,
)
from .translators import NeuralTranslator

# the shipped model averages this many trailing checkpoints
AVERAGE_LAST = 10

REPORT_HEADER = ("stage", "direction", "bleu", "hyp_len", "ref_len", "brevity_penalty")


@dataclass
class ExperimentContext:
    cfg: ExperimentConfig
    corpora: dict
    vocab: Vocabulary
    model_cfg: ModelConfig
    dev: TrainingMixture
    test: dict
    corpus_artifacts: dict = field(default_factory=dict)
    stage_artifacts: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentResult:
    stages: dict
    bt_models: tuple
    report_id: str | None


def _oriented(corpus: ParallelCorpus, direction: str) -> ParallelCorpus:
    src, tgt = parse_direction(direction)
    if (src, tgt) == (corpus.src_lang, corpus.tgt_lang):
        return corpus
    if (src, tgt) == (corpus.tgt_lang, corpus.src_lang):
        return corpus.swapped()
    raise ConfigError(
        f"direction {direction!r} does not match corpus languages "
        f"{corpus.src_lang}-{corpus.tgt_lang}"
    )


def prepare(cfg: ExperimentConfig) -> ExperimentContext:
    """Load corpora, freeze the vocabulary, and bind the architecture."""
    corpora = {}
    for name in sorted(cfg.corpora):
        spec = cfg.corpora[name]
        if spec.kind == "parallel":
            corpora[name] = ingest_parallel(
                spec.src_path, spec.tgt_path, (spec.src_lang, spec.tgt_lang)
            )
        else:
            corpora[name] = read_monolingual(spec.path, spec.lang, spec.domain)
    in_sentences = []
    for name in sorted(corpora):
        spec = cfg.corpora[name]
        if spec.domain == "in" and spec.kind == "parallel":
            in_sentences += list(corpora[name].side("src"))
            in_sentences += list(corpora[name].side("tgt"))
    if not in_sentences:
        raise ConfigError(
            "the vocabulary is built from in-domain parallel data, but none is configured"
        )
    vocab = build_vocab(in_sentences, cfg.languages, cfg.model.vocab_size)
    model_cfg = ModelConfig(
        vocab_size=len(vocab),
        embed_dim=cfg.model.embed_dim,
        hidden_dim=cfg.model.hidden_dim,
        max_decode_len=cfg.model.max_decode_len,
    )
    dev_entries = [(d, corpora[name]) for d, name in sorted(cfg.eval.dev.items())]
    dev = make_mixture(dev_entries, "none", derive_seed(cfg.seed, "dev"))
    test = {d: _oriented(corpora[name], d) for d, name in sorted(cfg.eval.test.items())}
    return ExperimentContext(cfg, corpora, vocab, model_cfg, dev, test)


def _corpus_artifact(ctx: ExperimentContext, store: ArtifactStore, name: str) -> str:
    """Store a registry corpus on first use; later calls reuse the id."""
    if name in ctx.corpus_artifacts:
        return ctx.corpus_artifacts[name]
    spec = ctx.cfg.corpora[name]
    if spec.kind == "parallel":
        config = {"corpus": name, "src_lang": spec.src_lang,
                  "tgt_lang": spec.tgt_lang, "domain": spec.domain}
        art_id = store_parallel(store, config, [], ctx.corpora[name])
    else:
        config = {"corpus": name, "lang": spec.lang, "domain": spec.domain}
        art_id = store_monolingual(store, config, [], ctx.corpora[name])
    ctx.corpus_artifacts[name] = art_id
    return art_id


def _mixture_score(
    cfg: ModelConfig,
    params,
    vocab: Vocabulary,
    mixture: TrainingMixture,
    decode: DecodeConfig,
) -> BleuScore:
    hyps = [
        beam_decode(cfg, params, vocab, src, decode) or (UNK,)
        for src, _, _ in mixture.examples
    ]
    refs = [tgt for _, tgt, _ in mixture.examples]
    return bleu(hyps, refs)


def _model_dims(cfg: ModelConfig) -> dict:
    return {
        "vocab_size": cfg.vocab_size,
        "embed_dim": cfg.embed_dim,
        "hidden_dim": cfg.hidden_dim,
        "max_decode_len": cfg.max_decode_len,
    }


def _dedupe(ids) -> list:
    return list(dict.fromkeys(ids))


def _finalize(ctx: ExperimentContext, checkpoints):
    """Average the trailing checkpoints into the model that gets shipped."""
    tail = checkpoints[-min(AVERAGE_LAST, len(checkpoints)):]
    averaged = average_checkpoints(tail)
    dev = _mixture_score(ctx.model_cfg, averaged, ctx.vocab, ctx.dev, DecodeConfig(beam=1))
    model = NeuralModel(ctx.model_cfg, ctx.vocab, averaged)
    return model, checkpoints[-1].step, dev.score


def _resolve_init(ref: str, store: ArtifactStore, ctx: ExperimentContext) -> str:
    if ref in ctx.stage_artifacts:
        return ctx.stage_artifacts[ref]
    if store.exists(ref):
        return ref
    raise ConfigError(f"unresolved init_from {ref!r}: no such stage or stored artifact")


def run_stage(spec: StageSpec, store: ArtifactStore, ctx: ExperimentContext) -> str:
    """Train one stage and store the averaged model; returns its artifact id."""
    directed = []
    for direction, name, _ in spec.data:
        if name not in ctx.corpora:
            raise ConfigError(f"stage {spec.stage_id!r}: unknown corpus {name!r}")
        corpus = ctx.corpora[name]
        if not isinstance(corpus, ParallelCorpus):
            raise ConfigError(f"stage {spec.stage_id!r}: corpus {name!r} is not parallel")
        directed.append((direction, corpus))
    mixture = make_mixture(
        directed, "match_largest", derive_seed(ctx.cfg.seed, "mixture", spec.stage_id)
    )

    if spec.strategy == "scratch":
        params = init_model(ctx.model_cfg, derive_seed(ctx.cfg.seed, "init", spec.stage_id))
        model = NeuralModel(ctx.model_cfg, ctx.vocab, params)
        checkpoints = train(model, mixture, ctx.dev, spec.schedule)
        init_id = None
    else:
        init_id = _resolve_init(spec.init_from, store, ctx)
        init_model_, init_ckpt = load_model_artifact(store, init_id)
        if init_model_.vocab.hash() != ctx.vocab.hash():
            raise ConfigError(
                f"stage {spec.stage_id!r}: init model vocabulary does not match "
                f"the experiment's"
            )
        model = NeuralModel(ctx.model_cfg, ctx.vocab, init_model_.parameters)
        checkpoints = fine_tune(model, init_ckpt, mixture, ctx.dev, spec.schedule)

    final, step, dev_score = _finalize(ctx, checkpoints)
    config = {
        "stage_id": spec.stage_id,
        "strategy": spec.strategy,
        "data": [list(entry) for entry in spec.data],
        "schedule": asdict(spec.schedule),
        "init_from": init_id,
        "experiment_seed": ctx.cfg.seed,
        "model": _model_dims(ctx.model_cfg),
        "vocab_hash": ctx.vocab.hash(),
    }
    parents = [] if init_id is None else [init_id]
    parents += [_corpus_artifact(ctx, store, name) for _, name, _ in spec.data]
    return store_model(store, config, _dedupe(parents), final, step, dev_score)


def evaluate_artifact(store: ArtifactStore, ctx: ExperimentContext, label: str, art_id: str):
    """BLEU rows (dev plus each bound test direction) for a stored model."""
    model, _ = load_model_artifact(store, art_id)
    decode = DecodeConfig(beam=ctx.cfg.eval.beam, alpha=ctx.cfg.eval.alpha)
    dev = _mixture_score(model.config, model.parameters, model.vocab, ctx.dev,
                         DecodeConfig(beam=1))
    rows = [(label, "dev", f"{dev.score:.4f}", dev.hyp_len, dev.ref_len,
             f"{dev.brevity_penalty:.4f}")]
    for direction in sorted(ctx.test):
        corpus = ctx.test[direction]
        src_lang, tgt_lang = parse_direction(direction)
        translator = NeuralTranslator(model, src_lang, tgt_lang, decode)
        hyps = translator.translate(corpus.side("src"))
        score = bleu(hyps, list(corpus.side("tgt")))
        rows.append((label, direction, f"{score.score:.4f}", score.hyp_len,
                     score.ref_len, f"{score.brevity_penalty:.4f}"))
    return rows


def _execute_stages(cfg: ExperimentConfig, store: ArtifactStore, ctx: ExperimentContext):
    labelled = []
    for spec in cfg.stages:
        art_id = run_stage(spec, store, ctx)
        ctx.stage_artifacts[spec.stage_id] = art_id
        labelled.append((spec.stage_id, art_id))
    return labelled


def _evaluate_and_report(store: ArtifactStore, ctx: ExperimentContext, labelled):
    all_rows = []
    series = {}
    for label, art_id in labelled:
        rows = evaluate_artifact(store, ctx, label, art_id)
        store.put(
            "report",
            {"report": "stage", "stage": label, "model": art_id},
            [art_id],
            {"report.tsv": tsv_bytes(REPORT_HEADER, rows)},
        )
        all_rows += rows
        for row in rows:
            series.setdefault(row[1], []).append((label, float(row[2])))
    return all_rows, series


def run_multistage(cfg: ExperimentConfig, store: ArtifactStore) -> dict:
    """Run the configured stages in order; returns stage_id -> artifact id.

    A stage failure propagates after earlier stages' artifacts are already
    stored, so partial progress survives for inspection.
    """
    if not cfg.stages:
        return {}
    ctx = prepare(cfg)
    labelled = _execute_stages(cfg, store, ctx)
    _evaluate_and_report(store, ctx, labelled)
    return dict(labelled)


def _in_domain_text(ctx: ExperimentContext, lang: str) -> MonolingualCorpus:
    sentences = []
    for name in sorted(ctx.corpora):
        spec = ctx.cfg.corpora[name]
        if spec.domain != "in":
            continue
        corpus = ctx.corpora[name]
        if isinstance(corpus, ParallelCorpus):
            if corpus.src_lang == lang:
                sentences += list(corpus.side("src"))
            if corpus.tgt_lang == lang:
                sentences += list(corpus.side("tgt"))
        elif corpus.lang == lang:
            sentences += list(corpus.sentences)
    if not sentences:
        raise ConfigError(f"no in-domain text for language {lang!r}")
    return MonolingualCorpus(lang, tuple(sentences), "in")


def select_monolingual(bt: BTConfig, ctx: ExperimentContext) -> dict:
    """Per-language Moore-Lewis selection of back-translation candidates."""
    selections = {}
    for lang in sorted({parse_direction(d)[1] for d in bt.directions}):
        sel = bt.selection[lang]
        mono = ctx.corpora[sel.mono]
        in_lm = train_ngram(_in_domain_text(ctx, lang), sel.order)
        general_lm = train_ngram(mono, sel.order)
        chosen = moore_lewis_select(SelectionConfig(sel.t, in_lm, general_lm), mono)
        if not chosen:
            raise DataError(
                f"selection for {lang!r} kept nothing; every candidate has "
                f"tokens unknown to the in-domain model"
            )
        selections[lang] = MonolingualCorpus(
            lang, tuple(c.sentence for c in chosen), "selected"
        )
    return selections


def back_translate(
    model: NeuralModel,
    selections: dict,
    directions,
    decode: DecodeConfig = DecodeConfig(),
) -> dict:
    """Pseudo-parallel corpora keyed by direction.

    For direction X-Y the selected Y monolingual text is decoded Y->X; pairs
    are (machine X, original Y) with the Y side preserved verbatim.
    """
    out = {}
    for direction in sorted(set(directions)):
        src_lang, tgt_lang = parse_direction(direction)
        if tgt_lang not in selections:
            raise ConfigError(
                f"direction {direction!r} needs a selection for language {tgt_lang!r}"
            )
        mono = selections[tgt_lang]
        if mono.lang != tgt_lang:
            raise ConfigError(
                f"selection keyed {tgt_lang!r} holds {mono.lang!r} text"
            )
        translator = NeuralTranslator(model, tgt_lang, src_lang, decode)
        machine = translator.translate(mono.sentences)
        out[direction] = ParallelCorpus(src_lang, tgt_lang, tuple(zip(machine, mono.sentences)))
    return out


def bt_iterate(base_id: str, bt: BTConfig, store: ArtifactStore, ctx: ExperimentContext) -> list:
    """Back-translation rounds; returns [base id, round 1 id, ..., round r id].

    Each round generates pseudo data with the newest model, mixes it with the
    original in-domain parallel data (match-largest), and either fine-tunes
    the current model or trains from scratch. The selection is computed once
    and reused unless `reselect` asks for a fresh pool every round.
    """
    if not store.exists(base_id):
        raise ConfigError(f"unknown base model {base_id!r}")
    ids = [base_id]
    selections = None
    for round_no in range(1, bt.rounds + 1):
        current_id = ids[-1]
        model, ckpt = load_model_artifact(store, current_id)
        if model.vocab.hash() != ctx.vocab.hash():
            raise ConfigError("base model vocabulary does not match the experiment's")
        if selections is None or bt.reselect:
            selections = select_monolingual(bt, ctx)

        pseudo = back_translate(model, selections, bt.directions)
        pseudo_ids = {}
        for direction in sorted(pseudo):
            config = {"corpus": "pseudo", "direction": direction,
                      "round": round_no, "generator": current_id}
            pseudo_ids[direction] = store_parallel(
                store, config, [current_id], pseudo[direction]
            )

        directed = []
        parents = []
        for direction in sorted(set(bt.directions)):
            pair = frozenset(parse_direction(direction))
            for name in sorted(ctx.corpora):
                spec = ctx.cfg.corpora[name]
                if (spec.kind == "parallel" and spec.domain == "in"
                        and spec.languages() == pair):
                    directed.append((direction, ctx.corpora[name]))
                    parents.append(_corpus_artifact(ctx, store, name))
            directed.append((direction, pseudo[direction]))
            parents.append(pseudo_ids[direction])
        mixture = make_mixture(
            directed, "match_largest", derive_seed(ctx.cfg.seed, "bt-mixture", round_no)
        )
        # a fresh sub-seed per round so rounds see different batch orders
        sched = replace(bt.schedule, seed=derive_seed(ctx.cfg.seed, "bt-train", round_no))

        if bt.mode == "finetune":
            checkpoints = fine_tune(model, ckpt, mixture, ctx.dev, sched)
            init_parents = [current_id]
        else:
            params = init_model(ctx.model_cfg, derive_seed(ctx.cfg.seed, "bt-init", round_no))
            fresh = NeuralModel(ctx.model_cfg, ctx.vocab, params)
            checkpoints = train(fresh, mixture, ctx.dev, sched)
            init_parents = []

        final, step, dev_score = _finalize(ctx, checkpoints)
        config = {
            "bt_round": round_no,
            "mode": bt.mode,
            "directions": sorted(set(bt.directions)),
            "schedule": asdict(sched),
            "experiment_seed": ctx.cfg.seed,
            "model": _model_dims(ctx.model_cfg),
            "vocab_hash": ctx.vocab.hash(),
        }
        new_id = store_model(
            store, config, _dedupe(init_parents + parents), final, step, dev_score
        )
        ids.append(new_id)
    return ids


def run_experiment(cfg: ExperimentConfig, store: ArtifactStore) -> ExperimentResult:
    """Stages, then optional back-translation, then the experiment report.

    The report artifact holds the full BLEU table as TSV and a score-by-stage
    chart as PNG; its parents are every model it covers.
    """
    if not cfg.stages:
        if cfg.bt is not None:
            raise ConfigError("bt needs a trained base model; configure at least one stage")
        return ExperimentResult({}, (), None)
    ctx = prepare(cfg)
    labelled = _execute_stages(cfg, store, ctx)
    stage_ids = dict(labelled)
    bt_ids = ()
    if cfg.bt is not None:
        chain = bt_iterate(labelled[-1][1], cfg.bt, store, ctx)
        bt_ids = tuple(chain[1:])
        labelled = labelled + [
            (f"bt-round-{i}", art_id) for i, art_id in enumerate(bt_ids, 1)
        ]
    rows, series = _evaluate_and_report(store, ctx, labelled)
    files = {
        "report.tsv": tsv_bytes(REPORT_HEADER, rows),
        "bleu_by_stage.png": score_figure_bytes(series, "BLEU by stage", "stage", "BLEU"),
    }
    report_id = store.put(
        "report",
        {"report": "experiment", "seed": cfg.seed},
        [art_id for _, art_id in labelled],
        files,
    )
    return ExperimentResult(stage_ids, bt_ids, report_id)


@dataclass(frozen=True)
class GridPoint:
    candidate: object
    score: float | None
    error: str = ""


@dataclass(frozen=True)
class GridResult:
    best: object
    points: tuple


def grid_search(candidates, objective) -> GridResult:
    """Evaluate `objective` per candidate and keep the argmax.

    Ties go to the smaller candidate. A candidate whose objective raises a
    toolkit error is recorded as failed; the best among the successes wins.
    """
    candidates = list(candidates)
    if not candidates:
        raise ConfigError("grid search needs at least one candidate")
    points = []
    for cand in candidates:
        try:
            points.append(GridPoint(cand, float(objective(cand))))
        except ToolkitError as e:
            points.append(GridPoint(cand, None, str(e)))
    scored = [p for p in points if p.score is not None]
    if not scored:
        raise TrainingError("every grid candidate failed")
    best = min(scored, key=lambda p: (-p.score, p.candidate))
    return GridResult(best.candidate, tuple(points))
