"""Command-line entry point.

One binary with subcommands covering the whole workflow: corpus preparation,
subword and language models, data selection, alignment and phrase tables,
neural training and decoding, back-translation, and the artifact pipeline.
Exit codes: 0 success, 1 domain error, 2 usage error. Diagnostics go to
standard error; data goes to files or standard output.

Heavyweight modules are imported inside the handlers so `--help` stays fast.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, DataError, ToolkitError


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _say(message: str) -> None:
    print(message, file=sys.stderr)


def _fill(defaults, overrides: dict):
    """Apply non-None override fields onto a dataclass of defaults."""
    return replace(defaults, **{k: v for k, v in overrides.items() if v is not None})


def _store_root(args) -> Path:
    if args.store:
        return Path(args.store)
    env = os.environ.get("LOWRES_MT_STORE")
    if env:
        return Path(env)
    return Path("store")


def _load_doc(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: invalid JSON ({e})") from e
    if not isinstance(doc, dict):
        raise DataError(f"{path}: experiment config must be a JSON object")
    return doc


# ---------------------------------------------------------------- corpora


def _cmd_corpus_prep(args) -> None:
    from .corpus import clean, ingest_parallel, write_parallel

    corpus = ingest_parallel(args.src, args.tgt, (args.src_lang, args.tgt_lang))
    kept = clean(corpus, args.max_tokens)
    write_parallel(kept, args.out_src, args.out_tgt)
    _say(f"kept {len(kept)} of {len(corpus)} pairs")


def _cmd_subword(args) -> None:
    from .corpus import read_sentences, write_sentences
    from .subword import (
        apply_subword,
        decode_subword,
        learn_subword,
        load_subword,
        save_subword,
    )

    if args.mode == "learn":
        corpora = [read_sentences(p) for p in args.input]
        model = learn_subword(corpora, args.vocab_size, args.marker)
        save_subword(model, args.model)
        _say(f"learned {len(model.merges)} merges")
        return
    model = load_subword(args.model)
    op = apply_subword if args.mode == "apply" else decode_subword
    write_sentences(args.output, [op(model, s) for s in read_sentences(args.input)])


def _cmd_lm_train(args) -> None:
    from .corpus import read_monolingual
    from .lm import perplexity, save_ngram, train_ngram

    mono = read_monolingual(args.input, args.lang)
    model = train_ngram(mono, args.order)
    save_ngram(model, args.model)
    _say(f"trained order-{args.order} model on {len(mono)} sentences")
    if args.eval:
        ppl = perplexity(model, read_monolingual(args.eval, args.lang))
        print(f"perplexity = {ppl:.4f}")


def _cmd_select(args) -> None:
    from .corpus import read_monolingual, write_sentences
    from .lm import train_ngram
    from .selection import SelectionConfig, moore_lewis_select

    pool = read_monolingual(args.mono, args.lang)
    in_domain = read_monolingual(args.in_domain, args.lang)
    cfg = SelectionConfig(
        args.t,
        train_ngram(in_domain, args.order),
        train_ngram(pool, args.order),
    )
    chosen = moore_lewis_select(cfg, pool)
    write_sentences(args.output, [c.sentence for c in chosen])
    _say(f"selected {len(chosen)} of {len(pool)} sentences")


# ----------------------------------------------------------------- phrase


def _ingest(args):
    from .corpus import ingest_parallel

    return ingest_parallel(args.src, args.tgt, (args.src_lang, args.tgt_lang))


def _aligned(corpus, iterations: int):
    from .phrase import align_pair, train_ibm1

    lex = train_ibm1(corpus, iterations)
    return lex, [align_pair(lex, lex, pair) for pair in corpus.pairs]


def _cmd_align(args) -> None:
    corpus = _ingest(args)
    _, alignments = _aligned(corpus, args.iterations)
    with open(args.output, "w", encoding="utf-8") as f:
        for alignment in alignments:
            f.write(" ".join(f"{i}-{j}" for i, j in sorted(alignment.links)) + "\n")
    _say(f"aligned {len(corpus)} pairs")


def _cmd_phrase_table(args) -> None:
    from .phrase import build_phrase_table, save_phrase_table

    corpus = _ingest(args)
    lex, alignments = _aligned(corpus, args.iterations)
    table = build_phrase_table(corpus, alignments, lex, args.max_phrase_len)
    save_phrase_table(table, args.output)
    _say(f"extracted {len(table.entries)} phrase pairs")


def _cmd_triangulate(args) -> None:
    from .phrase import TriangulationConfig, load_phrase_table, save_phrase_table, triangulate

    table = triangulate(
        load_phrase_table(args.src_pivot),
        load_phrase_table(args.pivot_tgt),
        TriangulationConfig(args.k),
    )
    save_phrase_table(table, args.output)
    _say(f"triangulated to {len(table.entries)} phrase pairs")


def _cmd_prune(args) -> None:
    from .phrase import cooccurrence_stats, load_phrase_table, save_phrase_table, significance_prune

    table = load_phrase_table(args.table)
    stats = cooccurrence_stats(_ingest(args), args.max_phrase_len)
    pruned = significance_prune(table, stats, threshold=args.threshold)
    save_phrase_table(pruned, args.output)
    _say(f"kept {len(pruned.entries)} of {len(table.entries)} entries")


def _cmd_induce(args) -> None:
    from .corpus import read_monolingual
    from .phrase import (
        InductionConfig,
        LexicalTable,
        collect_phrases,
        induce_phrase_table,
        map_embeddings,
        save_phrase_table,
        train_embeddings,
        word2phrase,
    )

    cfg = _fill(
        InductionConfig(),
        {"beta": args.beta, "dim": args.dim, "n_best": args.n_best,
         "max_phrases": args.max_phrases},
    )
    src_mono = read_monolingual(args.src_mono, args.src_lang)
    tgt_mono = read_monolingual(args.tgt_mono, args.tgt_lang)
    if args.phrase_passes:
        src_mono = word2phrase(src_mono, passes=args.phrase_passes)
        tgt_mono = word2phrase(tgt_mono, passes=args.phrase_passes)

    pairs = []
    for i, line in enumerate(Path(args.seed_dict).read_text(encoding="utf-8").splitlines(), 1):
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"{args.seed_dict}:{i}: expected 2 tab-separated fields")
        pairs.append((parts[0], parts[1]))

    src_space = train_embeddings(src_mono, cfg, seed=args.seed)
    tgt_space = train_embeddings(tgt_mono, cfg, seed=args.seed + 1)
    mapped = map_embeddings(src_space, tgt_space, pairs)
    table = induce_phrase_table(
        collect_phrases(src_mono, cfg),
        collect_phrases(tgt_mono, cfg),
        (mapped, tgt_space),
        LexicalTable({}, {}),
        cfg,
        (args.src_lang, args.tgt_lang),
    )
    save_phrase_table(table, args.output)
    _say(f"induced {len(table.entries)} phrase pairs")


def _cmd_decode_pbsmt(args) -> None:
    from .corpus import read_sentences, write_sentences
    from .lm import load_ngram
    from .phrase import DecoderWeights, decode_monotone, load_phrase_table

    tables = [load_phrase_table(p) for p in args.table]
    lm = load_ngram(args.lm)
    weights = DecoderWeights(
        phi_fwd=args.w_phi_fwd, lex_fwd=args.w_lex_fwd,
        phi_bwd=args.w_phi_bwd, lex_bwd=args.w_lex_bwd,
        lm=args.w_lm, length=args.w_length,
    )
    hyps = [
        decode_monotone(tables, lm, weights, src, args.beam)
        for src in read_sentences(args.input)
    ]
    write_sentences(args.output, hyps)
    _say(f"decoded {len(hyps)} sentences")


# -------------------------------------------------------------------- nmt


def _schedule(args):
    from .nmt import TrainSchedule

    return _fill(
        TrainSchedule(),
        {"eval_every": args.eval_every, "patience": args.patience,
         "batch_size": args.batch_size, "learning_rate": args.learning_rate,
         "max_updates": args.max_updates, "seed": args.seed},
    )


def _finalize_and_save(args, model, checkpoints, dev) -> None:
    from .corpus import UNK
    from .evaluate import bleu
    from .nmt import NeuralModel, average_checkpoints, greedy_decode, save_model

    averaged = average_checkpoints(checkpoints[-args.avg_last:])
    final = NeuralModel(model.config, model.vocab, averaged)
    hyps = greedy_decode(final.config, averaged, final.vocab,
                         [src for src, _, _ in dev.examples])
    hyps = [h if h else (UNK,) for h in hyps]
    dev_bleu = bleu(hyps, [tgt for _, tgt, _ in dev.examples]).score
    save_model(args.out, final, step=checkpoints[-1].step, dev_bleu=dev_bleu)
    _say(f"saved step {checkpoints[-1].step}, dev BLEU {dev_bleu:.2f}")


def _cmd_train(args) -> None:
    from .corpus import parse_direction, read_mixture
    from .nmt import ModelConfig, NeuralModel, build_vocab, init_model, train

    mixture = read_mixture(args.mixture)
    dev = read_mixture(args.dev)
    languages = sorted(
        {l for d in mixture.direction_counts for l in parse_direction(d)}
    )
    sentences = [s for src, tgt, _ in mixture.examples for s in (src, tgt)]
    vocab = build_vocab(sentences, languages, args.vocab_size)
    cfg = ModelConfig(
        vocab_size=len(vocab), embed_dim=args.embed_dim,
        hidden_dim=args.hidden_dim, max_decode_len=args.max_decode_len,
    )
    model = NeuralModel(cfg, vocab, init_model(cfg, args.seed))
    checkpoints = train(model, mixture, dev, _schedule(args))
    _finalize_and_save(args, model, checkpoints, dev)


def _cmd_finetune(args) -> None:
    from .corpus import read_mixture
    from .nmt import fine_tune, load_model

    model, init = load_model(args.init)
    mixture = read_mixture(args.mixture)
    dev = read_mixture(args.dev)
    checkpoints = fine_tune(model, init, mixture, dev, _schedule(args))
    _finalize_and_save(args, model, checkpoints, dev)


def _cmd_decode(args) -> None:
    from .corpus import read_sentences, write_sentences
    from .nmt import DecodeConfig, load_model
    from .pipeline import NeuralTranslator

    model, _ = load_model(args.model)
    translator = NeuralTranslator(
        model, args.src_lang, args.tgt_lang,
        DecodeConfig(beam=args.beam, alpha=args.alpha, max_len=args.max_len),
    )
    hyps = translator.translate(read_sentences(args.input))
    write_sentences(args.output, hyps)
    _say(f"decoded {len(hyps)} sentences")


def _cmd_avg_ckpt(args) -> None:
    from .nmt import NeuralModel, average_checkpoints, load_model, save_model

    loaded = [load_model(d) for d in args.checkpoints]
    base, _ = loaded[0]
    for path, (model, _) in zip(args.checkpoints[1:], loaded[1:]):
        if model.config != base.config:
            raise ConfigError(f"{path}: architecture differs from {args.checkpoints[0]}")
        if model.vocab.hash() != base.vocab.hash():
            raise ConfigError(f"{path}: vocabulary differs from {args.checkpoints[0]}")
    averaged = average_checkpoints([ckpt for _, ckpt in loaded])
    step = max(ckpt.step for _, ckpt in loaded)
    save_model(args.out, NeuralModel(base.config, base.vocab, averaged), step=step)
    _say(f"averaged {len(loaded)} checkpoints")


def _cmd_grad_check(args) -> None:
    from .corpus import read_mixture
    from .errors import TrainingError
    from .nmt import grad_check, load_model

    model, _ = load_model(args.model)
    examples = read_mixture(args.mixture).examples[: args.batch_size]
    batch = [(model.vocab.encode(src), model.vocab.encode(tgt))
             for src, tgt, _ in examples]
    error = grad_check(model.config, model.parameters, batch,
                       epsilon=args.epsilon, coords=args.coords, seed=args.seed)
    print(f"max relative error = {error:.6e}")
    if error > args.tolerance:
        raise TrainingError(
            f"gradient check failed: {error:.6e} > {args.tolerance:g}"
        )


def _cmd_bt(args) -> None:
    from .corpus import parse_direction, read_monolingual, write_parallel
    from .nmt import DecodeConfig, load_model
    from .pipeline import back_translate

    model, _ = load_model(args.model)
    _, tgt_lang = parse_direction(args.direction)
    mono = read_monolingual(args.mono, tgt_lang)
    decode = DecodeConfig(beam=args.beam, alpha=args.alpha, max_len=args.max_len)
    pseudo = back_translate(model, {tgt_lang: mono}, [args.direction], decode)
    write_parallel(pseudo[args.direction], args.out_src, args.out_tgt)
    _say(f"back-translated {len(mono)} sentences")


# --------------------------------------------------------------- pipeline


def _parse_pipeline_config(args):
    from .pipeline import parse_experiment

    path = Path(args.config_file)
    doc = _load_doc(path)
    if args.seed is not None:
        doc = dict(doc, seed=args.seed)
    return parse_experiment(doc, path.parent)


def _cmd_pipeline_run(args) -> None:
    from .pipeline import ArtifactStore, run_experiment

    cfg = _parse_pipeline_config(args)
    result = run_experiment(cfg, ArtifactStore(_store_root(args)))
    for label, art_id in result.stages.items():
        print(f"{label}\t{art_id}")
    for i, art_id in enumerate(result.bt_models, 1):
        print(f"bt-round-{i}\t{art_id}")
    if result.report_id is not None:
        print(f"report\t{result.report_id}")


def _cmd_pipeline_bt(args) -> None:
    from .pipeline import ArtifactStore, bt_iterate, prepare

    cfg = _parse_pipeline_config(args)
    if cfg.bt is None:
        raise ConfigError(f"{args.config_file}: config has no bt section")
    chain = bt_iterate(args.base, cfg.bt, ArtifactStore(_store_root(args)), prepare(cfg))
    for i, art_id in enumerate(chain):
        print(f"round-{i}\t{art_id}")


def _cmd_pipeline_lineage(args) -> None:
    from .pipeline import ArtifactStore

    store = ArtifactStore(_store_root(args))
    for manifest in store.lineage(args.artifact):
        print(f"{manifest['id']}\t{manifest['kind']}")


# ------------------------------------------------------------- evaluation


def _cmd_bleu(args) -> None:
    from .corpus import read_sentences
    from .evaluate import bleu

    score = bleu(list(read_sentences(args.hyp)), list(read_sentences(args.ref)))
    precisions = "/".join(f"{100.0 * p:.1f}" for p in score.precisions)
    ratio = score.hyp_len / score.ref_len
    print(
        f"BLEU = {score.score:.2f}, {precisions} "
        f"(BP={score.brevity_penalty:.3f}, ratio={ratio:.3f}, "
        f"hyp_len={score.hyp_len}, ref_len={score.ref_len})"
    )


def _cmd_compare(args) -> None:
    from .corpus import read_sentences
    from .evaluate import paired_bootstrap

    report = paired_bootstrap(
        list(read_sentences(args.a)),
        list(read_sentences(args.b)),
        list(read_sentences(args.ref)),
        B=args.b_samples,
        seed=args.seed,
    )
    print(
        f"delta BLEU (A-B) = {report.delta_bleu:+.2f}, p = {report.p_value:.4f} "
        f"({report.samples} samples, seed {report.seed})"
    )


# ----------------------------------------------------------------- parser


def _add_pair_flags(p) -> None:
    p.add_argument("--src", required=True, help="source-side text file")
    p.add_argument("--tgt", required=True, help="target-side text file")
    p.add_argument("--src-lang", required=True)
    p.add_argument("--tgt-lang", required=True)


def _add_schedule_flags(p) -> None:
    p.add_argument("--eval-every", type=_positive_int, default=None)
    p.add_argument("--patience", type=_positive_int, default=None)
    p.add_argument("--batch-size", type=_positive_int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--max-updates", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--avg-last", type=_positive_int, default=1,
                   help="average this many trailing checkpoints")


def _add_decode_flags(p) -> None:
    p.add_argument("--beam", type=float, default=4,
                   help="beam width; inf for exhaustive search")
    p.add_argument("--alpha", type=float, default=0.0, help="length penalty exponent")
    p.add_argument("--max-len", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lowres-mt",
        description="Low-resource machine translation experimentation toolkit.",
    )
    parser.add_argument("--config", default=None,
                        help="JSON file of default flag values; explicit flags win")
    parser.add_argument("--threads", type=_positive_int, default=1,
                        help="cap on internal worker threads; 1 guarantees "
                        "bytewise determinism (execution is single-threaded)")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    p = sub.add_parser("corpus-prep", help="deduplicate and length-filter parallel text")
    _add_pair_flags(p)
    p.add_argument("--max-tokens", type=_positive_int, default=100)
    p.add_argument("--out-src", required=True)
    p.add_argument("--out-tgt", required=True)
    p.set_defaults(func=_cmd_corpus_prep)

    p = sub.add_parser("subword", help="learn or apply byte-pair subword merges")
    mode = p.add_subparsers(dest="mode", metavar="MODE", required=True)
    m = mode.add_parser("learn", help="learn merges from text files")
    m.add_argument("--input", nargs="+", required=True)
    m.add_argument("--vocab-size", type=_positive_int, required=True)
    m.add_argument("--marker", default="@@")
    m.add_argument("--model", required=True, help="where to write the merge model")
    m.set_defaults(func=_cmd_subword)
    for name, text in (("apply", "segment text"), ("decode", "undo segmentation")):
        m = mode.add_parser(name, help=text)
        m.add_argument("--model", required=True)
        m.add_argument("--input", required=True)
        m.add_argument("--output", required=True)
        m.set_defaults(func=_cmd_subword)

    p = sub.add_parser("lm-train", help="train a Kneser-Ney n-gram language model")
    p.add_argument("--input", required=True)
    p.add_argument("--lang", required=True)
    p.add_argument("--order", type=_positive_int, default=3)
    p.add_argument("--model", required=True)
    p.add_argument("--eval", default=None, help="print perplexity on this file")
    p.set_defaults(func=_cmd_lm_train)

    p = sub.add_parser("select", help="cross-entropy-difference data selection")
    p.add_argument("--mono", required=True, help="general-domain pool")
    p.add_argument("--in-domain", required=True, help="in-domain sample")
    p.add_argument("--lang", required=True)
    p.add_argument("--t", type=_positive_int, required=True, help="sentences to keep")
    p.add_argument("--order", type=_positive_int, default=3)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("align", help="IBM-1 word alignment with grow-diag-final")
    _add_pair_flags(p)
    p.add_argument("--iterations", type=_positive_int, default=5)
    p.add_argument("--output", required=True, help="one i-j link line per pair")
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("phrase-table", help="extract and score a phrase table")
    _add_pair_flags(p)
    p.add_argument("--iterations", type=_positive_int, default=5)
    p.add_argument("--max-phrase-len", type=_positive_int, default=7)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_phrase_table)

    p = sub.add_parser("triangulate", help="compose two phrase tables through a pivot")
    p.add_argument("--src-pivot", required=True, help="source-to-pivot table")
    p.add_argument("--pivot-tgt", required=True, help="pivot-to-target table")
    p.add_argument("--k", type=_positive_int, required=True,
                   help="pivot candidates kept per source phrase")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_triangulate)

    p = sub.add_parser("prune", help="significance-prune a phrase table")
    p.add_argument("--table", required=True)
    _add_pair_flags(p)
    p.add_argument("--max-phrase-len", type=_positive_int, default=7)
    p.add_argument("--threshold", type=float, default=None,
                   help="-log p threshold; default is the 1-1-1 p-value")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_prune)

    p = sub.add_parser("induce", help="induce a phrase table from monolingual embeddings")
    p.add_argument("--src-mono", required=True)
    p.add_argument("--tgt-mono", required=True)
    p.add_argument("--src-lang", required=True)
    p.add_argument("--tgt-lang", required=True)
    p.add_argument("--seed-dict", required=True, help="TSV of src, tgt word pairs")
    p.add_argument("--dim", type=_positive_int, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--n-best", type=_positive_int, default=None)
    p.add_argument("--max-phrases", type=_positive_int, default=None)
    p.add_argument("--phrase-passes", type=int, default=0,
                   help="collocation-merging passes before embedding")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_induce)

    p = sub.add_parser("decode-pbsmt", help="monotone phrase-based decoding")
    p.add_argument("--table", action="append", required=True,
                   help="phrase table; repeat to merge several")
    p.add_argument("--lm", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--beam", type=_positive_int, default=100)
    for feature in ("phi-fwd", "lex-fwd", "phi-bwd", "lex-bwd", "lm", "length"):
        p.add_argument(f"--w-{feature}", type=float, default=1.0)
    p.set_defaults(func=_cmd_decode_pbsmt)

    p = sub.add_parser("train", help="train a tagged multilingual model from scratch")
    p.add_argument("--mixture", required=True, help="TSV: direction, tagged source, target")
    p.add_argument("--dev", required=True, help="development mixture, same format")
    p.add_argument("--out", required=True, help="checkpoint directory to write")
    p.add_argument("--vocab-size", type=_positive_int, default=None)
    p.add_argument("--embed-dim", type=_positive_int, default=64)
    p.add_argument("--hidden-dim", type=_positive_int, default=64)
    p.add_argument("--max-decode-len", type=int, default=0)
    _add_schedule_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("finetune", help="continue training from a checkpoint")
    p.add_argument("--init", required=True, help="checkpoint directory to start from")
    p.add_argument("--mixture", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--out", required=True)
    _add_schedule_flags(p)
    p.set_defaults(func=_cmd_finetune)

    p = sub.add_parser("decode", help="translate text with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--src-lang", required=True)
    p.add_argument("--tgt-lang", required=True)
    _add_decode_flags(p)
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("avg-ckpt", help="average checkpoint parameters")
    p.add_argument("--checkpoints", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_avg_ckpt)

    p = sub.add_parser("grad-check", help="finite-difference gradient verification")
    p.add_argument("--model", required=True)
    p.add_argument("--mixture", required=True)
    p.add_argument("--batch-size", type=_positive_int, default=8)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--coords", type=_positive_int, default=200)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_grad_check)

    p = sub.add_parser("bt", help="back-translate monolingual text")
    p.add_argument("--model", required=True)
    p.add_argument("--mono", required=True, help="target-language monolingual text")
    p.add_argument("--direction", required=True,
                   help="pair to synthesize, e.g. ja-ru pairs machine ja with real ru")
    p.add_argument("--out-src", required=True)
    p.add_argument("--out-tgt", required=True)
    _add_decode_flags(p)
    p.set_defaults(func=_cmd_bt)

    p = sub.add_parser("pipeline", help="run experiments against an artifact store")
    pipe = p.add_subparsers(dest="pipeline_cmd", metavar="ACTION", required=True)
    r = pipe.add_parser("run", help="run stages, back-translation, and reports")
    r.add_argument("config_file", help="experiment config JSON")
    r.add_argument("--store", default=None,
                   help="artifact store root (default: $LOWRES_MT_STORE or ./store)")
    r.add_argument("--seed", type=int, default=None, help="override the config seed")
    r.set_defaults(func=_cmd_pipeline_run)
    r = pipe.add_parser("bt", help="iterate back-translation from a stored model")
    r.add_argument("config_file")
    r.add_argument("--base", required=True, help="artifact id of the starting model")
    r.add_argument("--store", default=None)
    r.add_argument("--seed", type=int, default=None)
    r.set_defaults(func=_cmd_pipeline_bt)
    r = pipe.add_parser("lineage", help="list an artifact's ancestry")
    r.add_argument("artifact")
    r.add_argument("--store", default=None)
    r.set_defaults(func=_cmd_pipeline_lineage)

    p = sub.add_parser("bleu", help="corpus BLEU of a hypothesis file")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.set_defaults(func=_cmd_bleu)

    p = sub.add_parser("compare", help="paired bootstrap significance test")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--b-samples", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_compare)

    return parser


def _walk_parsers(parser):
    stack = [parser]
    while stack:
        current = stack.pop()
        yield current
        for action in current._actions:
            if isinstance(action, argparse._SubParsersAction):
                stack.extend(action.choices.values())


def _apply_config_defaults(parser, argv) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return
    doc = _load_doc(Path(known.config))
    # subparsers parse into a fresh namespace, so defaults must be pushed
    # down to every parser that owns the flag; explicit flags still win
    applied = set()
    for current in _walk_parsers(parser):
        owned = {a.dest for a in current._actions} & set(doc)
        if owned:
            current.set_defaults(**{k: doc[k] for k in owned})
            applied.update(owned)
    unknown = sorted(set(doc) - applied)
    if unknown:
        raise ConfigError(f"{known.config}: unknown flag default {unknown[0]!r}")


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config_defaults(parser, argv)
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            parser.print_usage(sys.stderr)
            return 2
        args.func(args)
    except ToolkitError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
