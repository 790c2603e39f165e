"""relkit command-line interface.

Subcommands: parse, build-orm, query, embed, synth, train, eval, zeroshot,
report. Every command is deterministic given its config and seed; outputs
carry no timestamps unless --timestamps is passed. RELKIT_THREADS caps the
internal worker count.
"""

from __future__ import annotations

import argparse
import datetime
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import corpus as corpusmod
from . import core, embed, evalkit, orm as ormmod, synth, zeroshot
from .errors import ConfigError, RelkitError
from .relhead import (Dims, Toggles, TrainConfig, build_example, init_params,
                      load_params, predict_scene, save_params, train)


def _workers(requested: int) -> int:
    cap = os.environ.get("RELKIT_THREADS")
    if cap:
        try:
            return max(1, min(requested, int(cap)))
        except ValueError as exc:
            raise ConfigError(f"bad RELKIT_THREADS value: {cap!r}") from exc
    return max(1, requested)


def _load_run_config(args) -> cfgmod.RunConfig:
    cfg = cfgmod.load_config(args.config) if args.config else cfgmod.RunConfig()
    overrides = {}
    for name in ("seed", "epochs", "learning_rate", "sigma", "workers",
                 "m_candidates", "k_candidates", "micro_recall"):
        if hasattr(args, name) and getattr(args, name) is not None:
            overrides[name] = getattr(args, name)
    if getattr(args, "ablation", None) == "all-off":
        overrides.update(object_attention=False,
                         geometric_encoding_objects=False,
                         geometric_encoding_relationships=False,
                         subject_object_attention=False)
    return cfgmod.apply_overrides(cfg, overrides)


def _toggles(cfg: cfgmod.RunConfig) -> Toggles:
    return Toggles(
        object_attention=cfg.object_attention,
        geometric_objects=cfg.geometric_encoding_objects,
        geometric_relationships=cfg.geometric_encoding_relationships,
        subject_object_attention=cfg.subject_object_attention,
        attention_mean=cfg.attention_mean,
    )


def _maybe_timestamp(args, out) -> None:
    if getattr(args, "timestamps", False):
        out.write(f"# generated {datetime.datetime.now().isoformat()}\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_parse(args) -> int:
    stoplist = (corpusmod.load_wordlist(args.stoplist)
                if args.stoplist else None)
    lexicon = (corpusmod.load_wordlist(args.predicate_lexicon)
               if args.predicate_lexicon else None)
    if args.jsonl:
        corpus = corpusmod.ingest_triplet_file(args.infile)
    else:
        text = Path(args.infile).read_text()
        corpus = corpusmod.extract_from_text(text, stoplist, lexicon,
                                             source=str(args.infile))
    if args.min_count and args.min_count > 1:
        corpus, _, _ = corpusmod.filter_vocabulary(corpus, args.min_count)
    corpusmod.save_triplet_file(corpus, args.out)
    print(corpus.total_weight())
    return 0


def cmd_build_orm(args) -> int:
    corpus = corpusmod.ingest_triplet_file(args.infile)
    table = ormmod.build_orm(corpus)
    ormmod.save_orm(table, args.out)
    print(f"pairs\t{len(table)}")
    print(f"total\t{table.total()}")
    return 0


def cmd_query(args) -> int:
    table = ormmod.load_orm(args.orm)
    if args.draw is not None:
        if args.seed is None:
            raise ConfigError("--draw requires --seed")
        chosen = ormmod.sample_candidates(table, args.subject, args.object,
                                          m=args.top, k=args.draw,
                                          seed=args.seed,
                                          backoff=not args.no_backoff)
        for predicate in chosen:
            print(predicate)
        return 0
    result = ormmod.lookup(table, args.subject, args.object,
                           backoff=not args.no_backoff)
    if result.backoff:
        print("# backoff: pair unseen, global marginal distribution")
    for predicate, prob in result.entries[:args.top]:
        print(f"{predicate}\t{prob:.6g}")
    return 0


def cmd_embed(args) -> int:
    table = embed.load_embeddings(args.vectors)
    vec, known = embed.embed_phrase(table, args.phrase, strict=not args.lenient)
    if not known:
        print("# all tokens out of vocabulary; zero vector", file=sys.stderr)
    print(" ".join(repr(float(v)) for v in vec))
    return 0


def cmd_synth(args) -> int:
    cfg = _load_run_config(args)
    scfg = synth.SynthConfig(
        n_object_labels=args.objects,
        n_seen_predicates=args.predicates,
        n_heldout_predicates=args.heldout,
        d=cfg.d, r=cfg.r, e=cfg.e, sigma=cfg.sigma,
        n_train_scenes=args.train_scenes,
        n_test_scenes=args.test_scenes,
        objects_per_scene=args.objects_per_scene,
        edges_per_scene=args.edges_per_scene,
        seed=cfg.seed,
    )
    data = synth.generate(scfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    core.save_scenes(data.train_scenes, out / "train.jsonl")
    core.save_scenes(data.test_scenes, out / "test.jsonl")
    embed.save_embeddings(data.embeddings, out / "vectors.txt")
    cfgmod.save_vocab(data.object_vocab, out / "objects.tsv")
    cfgmod.save_vocab(data.predicate_vocab, out / "predicates.tsv")
    corpusmod.save_triplet_file(data.corpus, out / "corpus.jsonl")
    with open(out / "heldout.txt", "w") as fh:
        for label in data.heldout_predicates:
            fh.write(label + "\n")
    print(f"train_scenes\t{len(data.train_scenes)}")
    print(f"test_scenes\t{len(data.test_scenes)}")
    return 0


def _load_shared(args):
    object_vocab = cfgmod.load_vocab(args.objects)
    predicate_vocab = cfgmod.load_vocab(args.predicates)
    table = embed.load_embeddings(args.vectors)
    orm_table = ormmod.load_orm(args.orm)
    scenes = core.load_scenes(args.scenes)
    return object_vocab, predicate_vocab, table, orm_table, scenes


def cmd_train(args) -> int:
    cfg = _load_run_config(args)
    object_vocab, predicate_vocab, table, orm_table, scenes = _load_shared(args)
    n_pred = args.n_predicate_labels or len(predicate_vocab)
    dims = Dims(cfg.d, cfg.r, cfg.e, len(object_vocab), n_pred)
    examples = [build_example(s, object_vocab, predicate_vocab, table,
                              cfg.strict_oov) for s in scenes]
    tcfg = TrainConfig(
        learning_rate=cfg.learning_rate, epochs=cfg.epochs,
        lambdas=(cfg.lambda1, cfg.lambda2, cfg.lambda3),
        m_candidates=cfg.m_candidates, k_candidates=cfg.k_candidates,
        seed=cfg.seed, toggles=_toggles(cfg),
        orm_backoff=cfg.orm_backoff, strict_oov=cfg.strict_oov,
        workers=_workers(cfg.workers))
    params = init_params(dims, seed=cfg.seed,
                         lambdas=(cfg.lambda1, cfg.lambda2, cfg.lambda3))
    params, losses = train(tcfg, examples, orm_table, object_vocab, table, params)
    save_params(params, args.out)
    for epoch, loss in enumerate(losses):
        print(f"epoch\t{epoch}\t{loss:.6f}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load_run_config(args)
    object_vocab, predicate_vocab, table, orm_table, scenes = _load_shared(args)
    params = load_params(args.checkpoint)
    toggles = _toggles(cfg)
    predictions = []
    for scene in scenes:
        pred, _ = predict_scene(params, scene, orm_table, object_vocab,
                                predicate_vocab, table, toggles,
                                k_candidates=cfg.k_candidates,
                                orm_backoff=cfg.orm_backoff,
                                strict_oov=cfg.strict_oov,
                                protocol=args.protocol)
        predictions.append(pred)
    if args.protocol == "predcls":
        metrics = evalkit.predcls_eval(predictions, scenes,
                                       micro=cfg.micro_recall,
                                       graph_constraint=cfg.graph_constraint)
    else:
        metrics = evalkit.sgcls_eval(predictions, scenes,
                                     micro=cfg.micro_recall,
                                     graph_constraint=cfg.graph_constraint)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        _maybe_timestamp(args, out)
        evalkit.format_metrics(metrics, args.format, out)
    finally:
        if args.out:
            out.close()
    return 0


def cmd_zeroshot(args) -> int:
    cfg = _load_run_config(args)
    object_vocab, predicate_vocab, table, orm_table, scenes = _load_shared(args)
    params = load_params(args.checkpoint)
    labels = [line.strip() for line in Path(args.labels).read_text().splitlines()
              if line.strip()]
    matrix = zeroshot.build_label_matrix(labels, table)
    ks = [int(v) for v in args.topk.split(",")]
    ranked_lists = []
    gt_names = []
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        _maybe_timestamp(args, out)
        for si, scene in enumerate(scenes):
            _, pair_embs = predict_scene(
                params, scene, orm_table, object_vocab, predicate_vocab,
                table, _toggles(cfg), k_candidates=cfg.k_candidates,
                orm_backoff=cfg.orm_backoff, strict_oov=cfg.strict_oov,
                protocol="predcls")
            for s, o, p in scene.graph.edges:
                probs = zeroshot.predict_unseen(pair_embs[(s, o)], matrix,
                                                cfg.zeroshot_temperature)
                top = zeroshot.topk(probs, matrix.labels, max(ks))
                ranked_lists.append(top)
                gt_names.append(predicate_vocab.labels[p])
                out.write(f"{si}\t{s}\t{o}\t{predicate_vocab.labels[p]}\t"
                          + ",".join(top) + "\n")
        for k in ks:
            acc = evalkit.topk_accuracy(ranked_lists, gt_names, k)
            out.write(f"top{k}_accuracy\t{acc:.6f}\n")
    finally:
        if args.out:
            out.close()
    return 0


def cmd_report(args) -> int:
    cfg = _load_run_config(args)
    vocab = cfgmod.load_vocab(args.predicates)
    table = embed.load_embeddings(args.vectors)
    rare, frequent = evalkit.longtail_split(vocab, cfg.longtail_threshold)
    report = evalkit.synonym_report(vocab, table, cfg.synonym_threshold,
                                    strict=cfg.strict_oov)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        _maybe_timestamp(args, out)
        out.write(f"#longtail_threshold\t{cfg.longtail_threshold}\n")
        out.write(f"#rare\t{len(rare)}\t#frequent\t{len(frequent)}\n")
        out.write("label\tcount\tsplit\tsynonyms\tsynonym_instances\n")
        rare_set = set(rare)
        for label, count in zip(vocab.labels, vocab.counts):
            split = "rare" if label in rare_set else "frequent"
            n_syn, inst = report.get(label, (0, 0))
            out.write(f"{label}\t{count}\t{split}\t{n_syn}\t{inst}\n")
    finally:
        if args.out:
            out.close()
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="run config file (key = value lines)")
    p.add_argument("--scenes", required=True, help="scene JSONL file")
    p.add_argument("--orm", required=True, help="ORM TSV file")
    p.add_argument("--vectors", required=True, help="word embedding text file")
    p.add_argument("--objects", required=True, help="object vocabulary TSV")
    p.add_argument("--predicates", required=True, help="predicate vocabulary TSV")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--ablation", choices=["all-off"],
                   help="disable every ablation mechanism")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relkit",
        description="Scene-graph relationship toolkit: text-derived predicate "
                    "statistics, a trainable relationship head, zero-shot "
                    "classification, and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="extract or ingest triplets")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jsonl", action="store_true",
                   help="input is pre-parsed triplet JSONL")
    p.add_argument("--stoplist")
    p.add_argument("--predicate-lexicon", dest="predicate_lexicon")
    p.add_argument("--min-count", dest="min_count", type=int, default=1)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("build-orm", help="build the object-relationship mapping")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_orm)

    p = sub.add_parser("query", help="look up predicate candidates for a pair")
    p.add_argument("--orm", required=True)
    p.add_argument("--subject", required=True)
    p.add_argument("--object", required=True)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--draw", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-backoff", action="store_true")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("embed", help="pool a phrase embedding")
    p.add_argument("--vectors", required=True)
    p.add_argument("--phrase", required=True)
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--config")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--objects", type=int, default=8)
    p.add_argument("--predicates", type=int, default=10)
    p.add_argument("--heldout", type=int, default=0)
    p.add_argument("--train-scenes", dest="train_scenes", type=int, default=75)
    p.add_argument("--test-scenes", dest="test_scenes", type=int, default=30)
    p.add_argument("--objects-per-scene", dest="objects_per_scene",
                   type=int, default=3)
    p.add_argument("--edges-per-scene", dest="edges_per_scene",
                   type=int, default=2)
    p.add_argument("--seed", type=int)
    p.add_argument("--sigma", type=float)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the relationship head")
    _add_common_model_args(p)
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--n-predicate-labels", dest="n_predicate_labels", type=int,
                   help="classifier size; defaults to the predicate vocabulary")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run an evaluation protocol")
    _add_common_model_args(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--protocol", choices=["predcls", "sgcls"],
                   default="predcls")
    p.add_argument("--format", choices=["tsv", "table"], default="table")
    p.add_argument("--micro", dest="micro_recall", action="store_true",
                   default=None)
    p.add_argument("--out")
    p.add_argument("--timestamps", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("zeroshot", help="zero-shot classification over labels")
    _add_common_model_args(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--labels", required=True,
                   help="text file, one candidate label per line")
    p.add_argument("--topk", default="5,10")
    p.add_argument("--out")
    p.add_argument("--timestamps", action="store_true")
    p.set_defaults(func=cmd_zeroshot)

    p = sub.add_parser("report", help="long-tail split and synonym report")
    p.add_argument("--config")
    p.add_argument("--predicates", required=True)
    p.add_argument("--vectors", required=True)
    p.add_argument("--out")
    p.add_argument("--timestamps", action="store_true")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RelkitError as exc:
        print(f"relkit: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"relkit: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
