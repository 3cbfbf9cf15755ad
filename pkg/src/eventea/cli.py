"""Single executable with subcommands covering the full pipeline:
dataset analysis, string baselines, time splitting, encoding, training,
evaluation, case studies, and dataset construction.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric divergence.
Every file-producing run writes a JSON manifest next to its outputs.  The
environment variable ``EVENTEA_SEED`` overrides every seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import load_dataset, make_difficult_dataset, read_links, read_triples, write_dataset
from .encoder import TaeParams, encode_entities, load_params, save_params
from .errors import DataError, DivergenceError
from .evaluation import case_report, hits_at, mrr, recall_by_type, retrieve
from .kg import DEFAULT_NAME_POLICY, EntityTypeMap, degree_stats, entity_names
from .stringsim import SimilarityKind, levenshtein_ratio, name_match_align, normalize_name
from .timesplit import split_time
from .training import TrainConfig, grid_search, train
from .vectors import (
    ContextualStore,
    HashFallback,
    ProviderChain,
    StaticStore,
    load_embeddings,
    mean_pool,
    save_embeddings,
)
from .wlkernel import wl_similarity


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _global_seed() -> int | None:
    raw = os.environ.get("EVENTEA_SEED")
    return int(raw) if raw else None


def _write_manifest(output: Path, command: str, options: dict, seeds: dict) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(),
        "options": {
            key: value
            for key, value in options.items()
            if isinstance(value, (str, int, float, bool, list, tuple, type(None)))
        },
        "seeds": seeds,
    }
    if output.is_dir():
        path = output / "manifest.json"
    else:
        path = output.with_name(output.name + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _add_dataset_args(parser):
    parser.add_argument("--dataset", required=True, help="dataset directory")
    parser.add_argument("--fold", default=None, help="split folder inside the dataset")


def _add_name_args(parser):
    parser.add_argument(
        "--name-attr",
        action="append",
        default=None,
        help="name attribute preference, repeatable (default: rdfs:label style)",
    )
    parser.add_argument(
        "--no-lowercase",
        action="store_true",
        help="compare names without lowercasing",
    )


def _add_provider_args(parser):
    parser.add_argument("--static-store", default=None, help="static token-vector store")
    parser.add_argument("--contextual-store", default=None, help="contextual vector store")
    parser.add_argument("--fallback-dim", type=int, default=768)
    parser.add_argument("--fallback-seed", type=int, default=0)


def _name_policy(args):
    return tuple(args.name_attr) if args.name_attr else DEFAULT_NAME_POLICY


def _build_provider(args) -> ProviderChain:
    static = StaticStore.load(args.static_store) if args.static_store else None
    contextual = ContextualStore.load(args.contextual_store) if args.contextual_store else None
    dim = static.dim if static else contextual.dim if contextual else args.fallback_dim
    seed = _global_seed()
    fallback_seed = seed if seed is not None else args.fallback_seed
    return ProviderChain(HashFallback(dim, fallback_seed), static=static, contextual=contextual)


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


def _print_metrics(metrics: dict[str, float | None]) -> None:
    for key, value in metrics.items():
        print(f"{key}\t{'n/a' if value is None else f'{value:.4f}'}")


def _write_metrics(path: Path, header: dict, metrics: dict[str, float | None]) -> None:
    lines = [json.dumps(header, sort_keys=True)]
    for key, value in metrics.items():
        lines.append(json.dumps({"metric": key, "value": value}, sort_keys=True))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_analyze(args) -> int:
    dataset = load_dataset(args.dataset, args.fold)
    for side, kg in (("kg1", dataset.kg1), ("kg2", dataset.kg2)):
        stats = degree_stats(kg)
        print(
            f"{side}\tentities={len(kg.entities)}\trelations={len(kg.relations)}"
            f"\trel_triples={len(kg.relation_triples)}\tattributes={len(kg.attributes)}"
            f"\tattr_triples={len(kg.attribute_triples)}"
        )
        print(
            f"{side}\tdegree_min={stats.min_degree}\tdegree_mean={stats.mean_degree:.3f}"
            f"\tdegree_max={stats.max_degree}\tisolated={stats.isolated}"
        )
    similarity = wl_similarity(
        dataset.kg1, dataset.kg2, dataset.alignment.links, args.wl_iterations
    )
    print(f"wl_similarity\t{similarity:.6f}")
    if args.out:
        out = Path(args.out)
        metrics = {"wl_similarity": similarity}
        _write_metrics(out, {"command": "analyze", "wl_iterations": args.wl_iterations}, metrics)
        _write_manifest(out, "analyze", vars(args), {})
    return 0


def cmd_baseline(args) -> int:
    dataset = load_dataset(args.dataset, args.fold)
    policy = _name_policy(args)
    names1 = entity_names(dataset.kg1, policy)
    names2 = entity_names(dataset.kg2, policy)
    test_links = dataset.alignment.test_links
    source_names = {s: names1[s] for s, _ in test_links}
    target_names = {t: names2[t] for _, t in test_links}
    kind = SimilarityKind(args.kind)
    result = name_match_align(
        source_names,
        target_names,
        kind,
        k=args.topk,
        lowercase=not args.no_lowercase,
        gold=dict(test_links),
    )
    metrics = {
        "hits@1": hits_at(result.ranks, 1),
        "hits@10": hits_at(result.ranks, 10),
        "mrr": mrr(result.ranks),
    }
    _print_metrics(metrics)
    if args.out:
        out = Path(args.out)
        lines = []
        for source in result.sources:
            for rank, (target, score) in enumerate(result.candidates[source], start=1):
                lines.append(f"{source}\t{rank}\t{target}\t{score:.6f}")
        out.write_text("\n".join(lines) + "\n", encoding="utf-8")
        _write_manifest(out, "baseline", vars(args), {})
    if args.metrics:
        path = Path(args.metrics)
        _write_metrics(path, {"command": "baseline", "kind": kind.value}, metrics)
        _write_manifest(path, "baseline", vars(args), {})
    return 0


def cmd_split(args) -> int:
    result = split_time(args.name)
    print(f"time\t{result.time}")
    print(f"remainder\t{result.remainder}")
    return 0


def _scope_entities(dataset, side: int, scope: str) -> list[str]:
    kg = dataset.kg1 if side == 1 else dataset.kg2
    position = 0 if side == 1 else 1
    if scope == "all":
        return sorted(kg.entities)
    if scope == "test":
        return sorted({link[position] for link in dataset.alignment.test_links})
    return sorted({link[position] for link in dataset.alignment.links})


def cmd_encode(args) -> int:
    dataset = load_dataset(args.dataset, args.fold)
    provider = _build_provider(args)
    if args.params:
        params = load_params(args.params)
    else:
        params = TaeParams.initial(provider.dim, args.beta)
    if params.dim != provider.dim:
        raise DataError(
            f"params dimension {params.dim} does not match provider dimension {provider.dim}"
        )
    entities = _scope_entities(dataset, args.side, args.scope)
    graph = dataset.kg1 if args.side == 1 else dataset.kg2
    embeddings = encode_entities(
        graph,
        entities,
        provider,
        params,
        use_time_attention=not args.no_time_attention,
        use_other_attributes=not args.no_other_attributes,
        name_policy=_name_policy(args),
    )
    out = Path(args.out)
    save_embeddings(out, embeddings, provider.dim)
    _write_manifest(out, "encode", vars(args), {"fallback": provider.fallback.seed})
    print(f"encoded {len(embeddings)} entities (side {args.side}, scope {args.scope})")
    return 0


def cmd_train(args) -> int:
    dataset = load_dataset(args.dataset, args.fold)
    provider = _build_provider(args)
    config = TrainConfig.from_file(args.config) if args.config else TrainConfig(dim=provider.dim)
    if config.dim != provider.dim:
        raise DataError(
            f"config dimension {config.dim} does not match provider dimension {provider.dim}"
        )
    seed = _global_seed()
    if seed is not None:
        config = replace(config, seed=seed)
    kwargs = dict(
        use_time_attention=not args.no_time_attention,
        use_other_attributes=not args.no_other_attributes,
        name_policy=_name_policy(args),
    )
    if args.grid:
        params, log, cells = grid_search(dataset, provider, config, **kwargs)
        for cell in cells:
            print(f"grid\tmargin={cell.margin}\tbeta={cell.beta}\tvalid_hits1={cell.valid_hits1:.4f}")
    else:
        params, log = train(dataset, provider, config, **kwargs)
    out = Path(args.out)
    save_params(out, params)
    _write_manifest(out, "train", vars(args), {"train": config.seed, "fallback": provider.fallback.seed})
    log_path = Path(args.log) if args.log else out.with_name(out.name + ".log.jsonl")
    log_path.write_text(log.to_jsonl(), encoding="utf-8")
    print(f"best_epoch\t{log.best_epoch}")
    print(f"best_valid_hits1\t{log.best_valid_hits1:.4f}")
    return 0


def _load_eval_tables(args, dataset):
    src_embs = load_embeddings(args.embeddings_src)
    tgt_embs = load_embeddings(args.embeddings_tgt)
    test_links = dataset.alignment.test_links
    sources = {}
    for s, _ in test_links:
        if s not in src_embs:
            raise DataError(f"test source entity missing from embeddings: {s}")
        sources[s] = src_embs[s]
    if args.candidates == "all":
        pool = tgt_embs
    else:
        pool = {}
        for _, t in test_links:
            if t not in tgt_embs:
                raise DataError(f"test target entity missing from embeddings: {t}")
            pool[t] = tgt_embs[t]
    return sources, pool, dict(test_links)


def cmd_eval(args) -> int:
    dataset = load_dataset(args.dataset, args.fold)
    sources, pool, gold = _load_eval_tables(args, dataset)
    ranking = retrieve(sources, pool, gold, k=args.topk)
    metrics: dict[str, float | None] = {
        "hits@1": hits_at(ranking.ranks, 1),
        "hits@10": hits_at(ranking.ranks, 10),
        "mrr": mrr(ranking.ranks),
    }
    types = dataset.entity_types
    if args.types:
        types = EntityTypeMap(dict(read_links(args.types)))
    if types is not None:
        recall = recall_by_type(ranking.gold_ranks, types, k=1)
        metrics["recall@1_event"] = recall["event"]
        metrics["recall@1_other"] = recall["other"]
        metrics["recall@1_all"] = recall["all"]
    _print_metrics(metrics)
    if args.out:
        out = Path(args.out)
        header = {"command": "eval", "candidates": args.candidates, "topk": args.topk}
        _write_metrics(out, header, metrics)
        _write_manifest(out, "eval", vars(args), {})
    return 0


def cmd_cases(args) -> int:
    dataset = load_dataset(args.dataset, args.fold)
    sources, pool, gold = _load_eval_tables(args, dataset)
    if args.entities:
        requested = args.entities.split(",")
    elif args.entities_file:
        requested = [
            line.strip()
            for line in Path(args.entities_file).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    else:
        raise DataError("cases requires --entities or --entities-file")
    ranking = retrieve(sources, pool, gold, k=max(3, args.topk))
    policy = _name_policy(args)
    names1 = entity_names(dataset.kg1, policy)
    names2 = entity_names(dataset.kg2, policy)
    lowercase = not args.no_lowercase

    src_embs = {s: np.asarray(v) for s, v in sources.items()}
    tgt_embs = {t: np.asarray(v) for t, v in pool.items()}
    scorers = {
        "tae": lambda s, t: _cosine(src_embs[s], tgt_embs[t]),
        "leven": lambda s, t: levenshtein_ratio(
            normalize_name(names1[s], lowercase), normalize_name(names2[t], lowercase)
        ),
    }
    if args.contextual_store:
        store = ContextualStore.load(args.contextual_store)
        chain = ProviderChain(HashFallback(store.dim, args.fallback_seed), contextual=store)
        name_vec = lambda name: mean_pool(chain.encode(name))
        scorers["bert"] = lambda s, t: _cosine(name_vec(names1[s]), name_vec(names2[t]))

    report = case_report(requested, ranking, gold, scorers, top=3)
    text = report.to_tsv()
    print(text, end="")
    if args.out:
        out = Path(args.out)
        out.write_text(text, encoding="utf-8")
        _write_manifest(out, "cases", vars(args), {})
    return 0


def cmd_make_dataset(args) -> int:
    dataset = load_dataset(args.dataset, args.fold)
    policy = _name_policy(args)
    names1 = entity_names(dataset.kg1, policy)
    names2 = entity_names(dataset.kg2, policy)
    shared = read_triples(args.shared_triples) if args.shared_triples else None
    seed = _global_seed()
    filtered = make_difficult_dataset(
        dataset,
        names1,
        names2,
        threshold=args.threshold,
        seed=seed if seed is not None else args.seed,
        shared_triples=shared,
        lowercase=not args.no_lowercase,
    )
    out = Path(args.out)
    write_dataset(filtered, out)
    _write_manifest(out, "make-dataset", vars(args), {"split": args.seed})
    kept = len(filtered.alignment)
    print(f"retained {kept} of {len(dataset.alignment)} links at threshold {args.threshold}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="eventea", description=__doc__)
    parser.add_argument("--version", action="version", version=f"eventea {__version__}")
    commands = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = commands.add_parser("analyze", help="dataset statistics and WL structural similarity")
    _add_dataset_args(p)
    p.add_argument("--wl-iterations", type=int, default=3)
    p.add_argument("--out", default=None, help="metrics JSON-lines file")
    p.set_defaults(func=cmd_analyze)

    p = commands.add_parser("baseline", help="string-similarity name matching")
    _add_dataset_args(p)
    _add_name_args(p)
    p.add_argument("--kind", required=True, choices=[k.value for k in SimilarityKind])
    p.add_argument("--topk", type=int, default=10)
    p.add_argument("--out", default=None, help="ranked-candidates TSV")
    p.add_argument("--metrics", default=None, help="metrics JSON-lines file")
    p.set_defaults(func=cmd_baseline)

    p = commands.add_parser("split", help="show the time/remainder split of a name")
    p.add_argument("--name", required=True)
    p.set_defaults(func=cmd_split)

    p = commands.add_parser("encode", help="embed entities with the time-aware encoder")
    _add_dataset_args(p)
    _add_name_args(p)
    _add_provider_args(p)
    p.add_argument("--params", default=None, help="trained parameter store")
    p.add_argument("--beta", type=float, default=0.02, help="fusion weight when untrained")
    p.add_argument("--side", type=int, choices=(1, 2), required=True)
    p.add_argument("--scope", choices=("linked", "test", "all"), default="linked")
    p.add_argument("--no-time-attention", action="store_true")
    p.add_argument("--no-other-attributes", action="store_true")
    p.add_argument("--out", required=True, help="embedding table (store format)")
    p.set_defaults(func=cmd_encode)

    p = commands.add_parser("train", help="fit the encoder's combination layer")
    _add_dataset_args(p)
    _add_name_args(p)
    _add_provider_args(p)
    p.add_argument("--config", default=None, help="key=value training config file")
    p.add_argument("--grid", action="store_true", help="grid-search margin and beta")
    p.add_argument("--no-time-attention", action="store_true")
    p.add_argument("--no-other-attributes", action="store_true")
    p.add_argument("--out", required=True, help="parameter store output")
    p.add_argument("--log", default=None, help="training log JSON-lines file")
    p.set_defaults(func=cmd_train)

    p = commands.add_parser("eval", help="retrieval metrics for embedding tables")
    _add_dataset_args(p)
    p.add_argument("--embeddings-src", required=True)
    p.add_argument("--embeddings-tgt", required=True)
    p.add_argument("--types", default=None, help="entity type file for recall by category")
    p.add_argument("--topk", type=int, default=10)
    p.add_argument("--candidates", choices=("test", "all"), default="test")
    p.add_argument("--out", default=None, help="metrics JSON-lines file")
    p.set_defaults(func=cmd_eval)

    p = commands.add_parser("cases", help="nearest-neighbor case studies")
    _add_dataset_args(p)
    _add_name_args(p)
    p.add_argument("--embeddings-src", required=True)
    p.add_argument("--embeddings-tgt", required=True)
    p.add_argument("--entities", default=None, help="comma-separated source entities")
    p.add_argument("--entities-file", default=None)
    p.add_argument("--contextual-store", default=None, help="adds a BERT-store name scorer")
    p.add_argument("--fallback-seed", type=int, default=0)
    p.add_argument("--candidates", choices=("test", "all"), default="test")
    p.add_argument("--topk", type=int, default=10)
    p.add_argument("--out", default=None, help="case report TSV")
    p.set_defaults(func=cmd_cases)

    p = commands.add_parser(
        "make-dataset", help="difficult-pair filter and shared-triple split"
    )
    _add_dataset_args(p)
    _add_name_args(p)
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shared-triples", default=None, help="triples to split between graphs")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=cmd_make_dataset)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as err:
        print(f"eventea: data error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"eventea: data error: {err}", file=sys.stderr)
        return 2
    except DivergenceError as err:
        print(f"eventea: divergence: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
