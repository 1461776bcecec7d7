"""Staged pipeline: linking, expansion, clustering, features, two ranking
stages, and evaluation, each writing deterministic artifacts to disk.

Per-mode artifacts live under ``<out>/<mode>/``. The candidate set ranked in
stage 1 depends on the mode: tags-only seeds (T), tag and image seeds (TI),
or seeds plus intermediate categories (TII). The query graph itself is
always built so connectivity features see the expanded context.

Stage outputs carry no timestamps, so re-running with the same config and
seeds reproduces every file byte for byte.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from . import __version__
from .clustering import Partition, build_relatedness_graph, louvain
from .config import PipelineConfig
from .errors import ConfigError, IntegrityError, ParseError, StageDependencyError
from .evaluation import (
    MODES,
    EvalReport,
    compare_modes,
    evaluate,
    report_table,
    report_to_json,
)
from .features import (
    FEATURE_NAMES,
    build_idf_table,
    extract_instance_features,
    normalize_per_query,
    read_feature_rows,
    write_feature_rows,
)
from .kg import load_graph
from .linking import Instance, LinkMode, SeedSet, corpus_link_stats, link_instance, read_corpus
from .ltr import Ranking, TrainingExample, load_model, rank, save_model, train_coordinate_ascent
from .query_graph import QueryGraph, build_query_graph
from .topics import (
    InstanceVector,
    Lexicon,
    TopicModel,
    build_lexicon,
    load_lexicon,
    rank_images,
    save_lexicon,
    train_topic_models,
    vectorize,
    write_instance_vectors,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

STAGE_ORDER = (
    "link",
    "graph",
    "cluster",
    "features",
    "train1",
    "rank1",
    "lexicon",
    "train2",
    "rank2",
    "evaluate",
)

# Artifact file names and the stage producing each one.
ARTIFACTS = {
    "seeds.jsonl": "link",
    "link_report.json": "link",
    "query_graphs.jsonl": "graph",
    "partitions.jsonl": "cluster",
    "features.tsv": "features",
    "split.json": "train1",
    "model1.json": "train1",
    "rankings1.jsonl": "rank1",
    "lexicon.json": "lexicon",
    "topic_models/index.json": "train2",
    "rankings2.json": "rank2",
    "report.json": "evaluate",
    "report.txt": "evaluate",
}

STAGE_INPUTS = {
    "link": (),
    "graph": ("seeds.jsonl",),
    "cluster": ("query_graphs.jsonl",),
    "features": ("query_graphs.jsonl", "partitions.jsonl"),
    "train1": ("features.tsv",),
    "rank1": ("features.tsv", "model1.json"),
    "lexicon": ("rankings1.jsonl", "split.json"),
    "train2": ("rankings1.jsonl", "lexicon.json", "split.json"),
    "rank2": ("rankings1.jsonl", "lexicon.json", "split.json", "topic_models/index.json"),
    "evaluate": ("rankings2.json", "lexicon.json"),
}


def map_ordered(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> list[R]:
    """Apply ``fn`` over items, preserving input order regardless of workers."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def split_instances(instance_ids: Iterable[str], ratio: float, seed: int) -> tuple[set[str], set[str]]:
    """Deterministic train/test split: a pure function of ids, ratio, seed."""
    ordered = sorted(instance_ids)
    n = len(ordered)
    if n < 2:
        raise ConfigError("corpus must contain at least 2 instances to split")
    n_train = min(max(int(round(ratio * n)), 1), n - 1)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    train = {ordered[i] for i in perm[:n_train]}
    return train, {i for i in ordered if i not in train}


class PipelineContext:
    """Caches the loaded graph and corpus across stages of one run."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self._graph = None
        self._corpus: list[Instance] | None = None
        self._idf = None

    @property
    def graph(self):
        if self._graph is None:
            self._graph = load_graph(self.config.kg_nodes, self.config.kg_edges)
        return self._graph

    @property
    def idf(self):
        if self._idf is None:
            self._idf = build_idf_table(self.graph)
        return self._idf

    @property
    def corpus(self) -> list[Instance]:
        if self._corpus is None:
            instances = read_corpus(self.config.corpus)
            if self.config.image_labels is not None:
                overrides = _read_label_overrides(self.config.image_labels)
                instances = [
                    dataclasses.replace(inst, image_labels=overrides[inst.instance_id])
                    if inst.instance_id in overrides
                    else inst
                    for inst in instances
                ]
            self._corpus = instances
        return self._corpus

    def corpus_by_id(self) -> dict[str, Instance]:
        return {inst.instance_id: inst for inst in self.corpus}


def _read_label_overrides(path: Path) -> dict[str, tuple[str, ...]]:
    overrides: dict[str, tuple[str, ...]] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                overrides[str(obj["id"])] = tuple(str(t) for t in obj.get("image_labels", ()))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(f"{path}:{lineno}: bad image-label override ({exc})") from None
    return overrides


def _mode_dir(config: PipelineConfig) -> Path:
    return config.out / config.mode


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_manifest(config: PipelineConfig, stage: str, outputs: Sequence[str]) -> None:
    manifest = {
        "stage": stage,
        "mode": config.mode,
        "seed": config.seed,
        "seeds": {
            "split": config.resolved_split_seed(),
            "cluster": config.resolved_cluster_seed(),
            "train1": config.train1.seed,
            "train2": config.train2.seed,
        },
        "config_hash": config.config_hash(),
        "inputs": list(STAGE_INPUTS[stage]),
        "outputs": list(outputs),
        "version": __version__,
    }
    _write_json(_mode_dir(config) / f"{stage}.manifest.json", manifest)


def _check_inputs(config: PipelineConfig, stage: str) -> None:
    mode_dir = _mode_dir(config)
    for artifact in STAGE_INPUTS[stage]:
        if not (mode_dir / artifact).is_file():
            producer = ARTIFACTS[artifact]
            raise StageDependencyError(
                f"stage {stage!r} needs {mode_dir / artifact} which does not exist; "
                f"run stage {producer!r} first"
            )


def _link_mode(config: PipelineConfig) -> LinkMode:
    return LinkMode.TAGS_ONLY if config.mode == "T" else LinkMode.TAGS_AND_IMAGE


def _read_seed_sets(path: Path) -> list[SeedSet]:
    with path.open("r", encoding="utf-8") as fh:
        return [SeedSet.from_json_obj(json.loads(line)) for line in fh if line.strip()]


def _read_query_graphs(path: Path) -> list[QueryGraph]:
    with path.open("r", encoding="utf-8") as fh:
        return [QueryGraph.from_json_obj(json.loads(line)) for line in fh if line.strip()]


def _read_partitions(path: Path) -> dict[str, Partition]:
    partitions: dict[str, Partition] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            partitions[obj["instance_id"]] = Partition(
                assignment={int(n): int(c) for n, c in obj["assignment"].items()},
                modularity=float(obj["modularity"]),
            )
    return partitions


def _read_rankings_jsonl(path: Path) -> dict[str, Ranking]:
    rankings: dict[str, Ranking] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            rankings[obj["query_id"]] = Ranking(
                query_id=obj["query_id"],
                items=tuple((str(d), float(s)) for d, s in obj["items"]),
            )
    return rankings


def _load_split(mode_dir: Path) -> tuple[set[str], set[str]]:
    obj = json.loads((mode_dir / "split.json").read_text(encoding="utf-8"))
    return set(obj["train"]), set(obj["test"])


def _stage_link(ctx: PipelineContext) -> None:
    config = ctx.config
    mode_dir = _mode_dir(config)
    link_mode = _link_mode(config)
    seed_sets = map_ordered(
        lambda inst: link_instance(ctx.graph, inst, link_mode), ctx.corpus, config.workers
    )
    with (mode_dir / "seeds.jsonl").open("w", encoding="utf-8") as fh:
        for seed_set in seed_sets:
            fh.write(json.dumps(seed_set.to_json_obj(), sort_keys=True) + "\n")
    _write_json(mode_dir / "link_report.json", corpus_link_stats(ctx.graph, ctx.corpus).as_dict())
    _write_manifest(config, "link", ["seeds.jsonl", "link_report.json"])


def _stage_graph(ctx: PipelineContext) -> None:
    config = ctx.config
    mode_dir = _mode_dir(config)
    seed_sets = _read_seed_sets(mode_dir / "seeds.jsonl")
    graphs = map_ordered(
        lambda ss: build_query_graph(ctx.graph, ss), seed_sets, config.workers
    )
    with (mode_dir / "query_graphs.jsonl").open("w", encoding="utf-8") as fh:
        for qg in graphs:
            fh.write(json.dumps(qg.to_json_obj(), sort_keys=True) + "\n")
    _write_manifest(config, "graph", ["query_graphs.jsonl"])


def _stage_cluster(ctx: PipelineContext) -> None:
    config = ctx.config
    mode_dir = _mode_dir(config)
    graphs = _read_query_graphs(mode_dir / "query_graphs.jsonl")
    seed = config.resolved_cluster_seed()

    def cluster_one(qg: QueryGraph) -> dict:
        partition = louvain(build_relatedness_graph(qg), seed=seed)
        obj = partition.to_json_obj()
        obj["instance_id"] = qg.instance_id
        return obj

    results = map_ordered(cluster_one, graphs, config.workers)
    with (mode_dir / "partitions.jsonl").open("w", encoding="utf-8") as fh:
        for obj in results:
            fh.write(json.dumps(obj, sort_keys=True) + "\n")
    _write_manifest(config, "cluster", ["partitions.jsonl"])


def _candidates(config: PipelineConfig, qg: QueryGraph) -> list[int]:
    if config.mode == "TII":
        return sorted(qg.nodes)
    return sorted(qg.seeds)


def _stage_features(ctx: PipelineContext) -> None:
    config = ctx.config
    mode_dir = _mode_dir(config)
    graphs = _read_query_graphs(mode_dir / "query_graphs.jsonl")
    partitions = _read_partitions(mode_dir / "partitions.jsonl")
    instances = ctx.corpus_by_id()

    def extract_one(qg: QueryGraph) -> list[tuple[str, int, object, int | None]]:
        candidates = _candidates(config, qg)
        if not candidates:
            return []
        instance = instances[qg.instance_id]
        vectors = extract_instance_features(
            qg, partitions[qg.instance_id], instance, ctx.graph, ctx.idf, candidates
        )
        normalized = normalize_per_query([vectors[n] for n in candidates])
        grades = instance.concept_grades or {}
        return [
            (qg.instance_id, node_id, vector, grades.get(node_id))
            for node_id, vector in zip(candidates, normalized)
        ]

    rows = [row for chunk in map_ordered(extract_one, graphs, config.workers) for row in chunk]
    write_feature_rows(mode_dir / "features.tsv", rows)
    _write_manifest(config, "features", ["features.tsv"])


def _stage_train1(ctx: PipelineContext) -> None:
    config = ctx.config
    mode_dir = _mode_dir(config)
    rows = read_feature_rows(mode_dir / "features.tsv")
    train_ids, test_ids = split_instances(
        (inst.instance_id for inst in ctx.corpus), config.split_ratio, config.resolved_split_seed()
    )
    _write_json(mode_dir / "split.json", {"train": sorted(train_ids), "test": sorted(test_ids)})

    examples = [
        TrainingExample(query_id=iid, doc_id=str(nid), features=vec.values, grade=grade)
        for iid, nid, vec, grade in rows
        if grade is not None and iid in train_ids
    ]
    model = train_coordinate_ascent(examples, FEATURE_NAMES, config.train1)
    save_model(model, mode_dir / "model1.json")
    logger.info("stage train1: training MAP %.4f over %d examples", model.training_map, len(examples))
    _write_manifest(config, "train1", ["split.json", "model1.json"])


def _stage_rank1(ctx: PipelineContext) -> None:
    config = ctx.config
    mode_dir = _mode_dir(config)
    model = load_model(mode_dir / "model1.json")
    if model.feature_names != FEATURE_NAMES:
        raise IntegrityError(
            f"{mode_dir / 'model1.json'}: model feature names do not match the "
            "feature extractor; retrain with stage 'train1'"
        )
    rows = read_feature_rows(mode_dir / "features.tsv")

    by_instance: dict[str, list[tuple[str, tuple[float, ...]]]] = {}
    for iid, nid, vec, _ in rows:
        by_instance.setdefault(iid, []).append((str(nid), vec.values))

    with (mode_dir / "rankings1.jsonl").open("w", encoding="utf-8") as fh:
        for iid in sorted(by_instance):
            ranking = rank(model, by_instance[iid], query_id=iid)
            fh.write(
                json.dumps(
                    {"query_id": iid, "items": [[d, s] for d, s in ranking.items]},
                    sort_keys=True,
                )
                + "\n"
            )
    _write_manifest(config, "rank1", ["rankings1.jsonl"])


def _stage_lexicon(ctx: PipelineContext) -> None:
    config = ctx.config
    mode_dir = _mode_dir(config)
    rankings = _read_rankings_jsonl(mode_dir / "rankings1.jsonl")
    train_ids, _ = _load_split(mode_dir)
    # Built from the training split only, so evaluation stays leak-free.
    train_rankings = {iid: r for iid, r in rankings.items() if iid in train_ids}
    lexicon = build_lexicon(train_rankings, top_k=config.top_k)
    save_lexicon(lexicon, mode_dir / "lexicon.json")
    logger.info("stage lexicon: %d concepts (top_k=%d)", len(lexicon), config.top_k)
    _write_manifest(config, "lexicon", ["lexicon.json"])


def _vectors_for(
    ids: Iterable[str], rankings: dict[str, Ranking], lexicon: Lexicon
) -> list[InstanceVector]:
    vectors = []
    for iid in sorted(ids):
        if iid in rankings:
            vectors.append(vectorize(rankings[iid], lexicon))
        else:
            # Instances with no stage-1 candidates stay rankable as zeros.
            vectors.append(InstanceVector(instance_id=iid, entries={}))
    return vectors


def _topic_file(topic: str, used: set[str]) -> str:
    safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in topic) or "topic"
    name = f"{safe}.json"
    suffix = 1
    while name in used:  # distinct topics may sanitize identically
        name = f"{safe}_{suffix}.json"
        suffix += 1
    used.add(name)
    return name


def _stage_train2(ctx: PipelineContext) -> None:
    config = ctx.config
    mode_dir = _mode_dir(config)
    rankings = _read_rankings_jsonl(mode_dir / "rankings1.jsonl")
    lexicon = load_lexicon(mode_dir / "lexicon.json")
    train_ids, _ = _load_split(mode_dir)
    instances = ctx.corpus_by_id()

    vectors = _vectors_for(train_ids, rankings, lexicon)
    write_instance_vectors(vectors, mode_dir / "vectors_train.jsonl")
    gold = {iid: instances[iid].topics for iid in train_ids}
    topics = sorted({t for topic_set in gold.values() for t in topic_set})
    models = train_topic_models(vectors, gold, topics, lexicon, config.train2)

    models_dir = mode_dir / "topic_models"
    models_dir.mkdir(parents=True, exist_ok=True)
    index = {"topics": topics, "files": {}}
    used_names: set[str] = set()
    for topic_model in models:
        filename = _topic_file(topic_model.topic, used_names)
        save_model(topic_model.model, models_dir / filename)
        index["files"][topic_model.topic] = filename
    _write_json(models_dir / "index.json", index)
    _write_manifest(config, "train2", ["vectors_train.jsonl", "topic_models/index.json"])


def _stage_rank2(ctx: PipelineContext) -> None:
    config = ctx.config
    mode_dir = _mode_dir(config)
    rankings = _read_rankings_jsonl(mode_dir / "rankings1.jsonl")
    lexicon = load_lexicon(mode_dir / "lexicon.json")
    _, test_ids = _load_split(mode_dir)

    index = json.loads((mode_dir / "topic_models" / "index.json").read_text(encoding="utf-8"))
    models = [
        TopicModel(topic=topic, model=load_model(mode_dir / "topic_models" / index["files"][topic]))
        for topic in index["topics"]
    ]
    expected_names = lexicon.feature_names()
    for topic_model in models:
        if topic_model.model.feature_names != expected_names:
            raise IntegrityError(
                f"topic model {topic_model.topic!r} does not match the lexicon; "
                "retrain with stage 'train2'"
            )
    vectors = _vectors_for(test_ids, rankings, lexicon)
    write_instance_vectors(vectors, mode_dir / "vectors_test.jsonl")
    per_topic = rank_images(models, vectors)
    _write_json(
        mode_dir / "rankings2.json",
        {topic: [[d, s] for d, s in r.items] for topic, r in per_topic.items()},
    )
    _write_manifest(config, "rank2", ["vectors_test.jsonl", "rankings2.json"])


def _stage_evaluate(ctx: PipelineContext) -> None:
    config = ctx.config
    mode_dir = _mode_dir(config)
    obj = json.loads((mode_dir / "rankings2.json").read_text(encoding="utf-8"))
    rankings = {
        topic: Ranking(query_id=topic, items=tuple((str(d), float(s)) for d, s in items))
        for topic, items in obj.items()
    }
    lexicon = load_lexicon(mode_dir / "lexicon.json")
    gold = {inst.instance_id: inst.topics for inst in ctx.corpus}
    report = evaluate(
        rankings, gold, k=config.eval_k, mode=config.mode, lexicon_size=len(lexicon)
    )
    (mode_dir / "report.json").write_text(report_to_json(report), encoding="utf-8")
    (mode_dir / "report.txt").write_text(report_table(report), encoding="utf-8")
    logger.info(
        "stage evaluate [%s]: MAP %.4f, P@%d %.4f",
        config.mode,
        report.overall_map,
        config.eval_k,
        report.overall_p_at_k,
    )
    _write_manifest(config, "evaluate", ["report.json", "report.txt"])


_STAGE_FUNCS = {
    "link": _stage_link,
    "graph": _stage_graph,
    "cluster": _stage_cluster,
    "features": _stage_features,
    "train1": _stage_train1,
    "rank1": _stage_rank1,
    "lexicon": _stage_lexicon,
    "train2": _stage_train2,
    "rank2": _stage_rank2,
    "evaluate": _stage_evaluate,
}


def run_stage(config: PipelineConfig, stage: str) -> Path:
    """Run one pipeline stage (or ``all``) and return the artifact directory.

    ``all`` runs every stage for each of the three candidate-set modes and
    writes a cross-mode comparison at the output root. Re-running a stage
    overwrites its outputs deterministically.
    """
    if stage == "all":
        return run_all(config)
    if stage not in _STAGE_FUNCS:
        raise ConfigError(f"unknown stage {stage!r}; expected one of {', '.join(STAGE_ORDER)} or all")
    config.validate()
    mode_dir = _mode_dir(config)
    mode_dir.mkdir(parents=True, exist_ok=True)
    _check_inputs(config, stage)
    ctx = PipelineContext(config)
    _STAGE_FUNCS[stage](ctx)
    return mode_dir


def run_all(config: PipelineConfig) -> Path:
    """Run the full pipeline for modes T, TI, and TII and compare them."""
    config.validate()
    reports: list[EvalReport] = []
    for mode in MODES:
        mode_config = dataclasses.replace(config, mode=mode)
        mode_dir = _mode_dir(mode_config)
        mode_dir.mkdir(parents=True, exist_ok=True)
        ctx = PipelineContext(mode_config)
        for stage in STAGE_ORDER:
            _check_inputs(mode_config, stage)
            _STAGE_FUNCS[stage](ctx)
        reports.append(
            EvalReport.from_json_obj(
                json.loads((mode_dir / "report.json").read_text(encoding="utf-8"))
            )
        )
    comparison = compare_modes(reports)
    _write_json(config.out / "comparison.json", comparison.to_json_obj())
    (config.out / "comparison.txt").write_text(comparison.table(), encoding="utf-8")
    logger.info("comparison written to %s", config.out / "comparison.txt")
    return config.out
