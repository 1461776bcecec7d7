"""Stage 2: concept lexicon, instance vectors, and per-topic image ranking.

The lexicon is the union of each instance's top-k ranked concepts; its size
is the dimensionality of the stage-2 vectors, whose entries are the stage-1
relevance scores of the concepts an instance was ranked on. One linear
model is trained per class topic (a single shared model would order images
identically for every topic), and images are ranked per topic by score.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import IntegrityError, TrainingError
from .ltr import (
    CoordinateAscentConfig,
    RankModel,
    Ranking,
    TrainingExample,
    rank,
    train_coordinate_ascent,
)


@dataclass(frozen=True)
class Lexicon:
    """Ordered map from concept node id to stage-2 dimension index."""

    entries: Mapping[int, int]
    top_k: int

    def __len__(self) -> int:
        return len(self.entries)

    def feature_names(self) -> tuple[str, ...]:
        ordered = sorted(self.entries.items(), key=lambda kv: kv[1])
        return tuple(f"concept:{node_id}" for node_id, _ in ordered)

    def to_json_obj(self) -> dict:
        return {
            "top_k": self.top_k,
            "entries": {str(node_id): dim for node_id, dim in sorted(self.entries.items())},
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Lexicon":
        return cls(
            entries={int(node_id): int(dim) for node_id, dim in obj["entries"].items()},
            top_k=int(obj["top_k"]),
        )


@dataclass(frozen=True)
class InstanceVector:
    """Sparse stage-2 vector: dimension index -> stage-1 relevance score."""

    instance_id: str
    entries: Mapping[int, float]

    def dense(self, size: int) -> tuple[float, ...]:
        values = [0.0] * size
        for dim, score in self.entries.items():
            if dim >= size:
                raise IntegrityError(
                    f"instance {self.instance_id!r}: dimension {dim} exceeds lexicon size {size}"
                )
            values[dim] = score
        return tuple(values)


@dataclass(frozen=True)
class TopicModel:
    topic: str
    model: RankModel


def build_lexicon(stage1_rankings: Mapping[str, Ranking], top_k: int = 10) -> Lexicon:
    """Union of the top-k ranked concepts across instances.

    Dimensions are assigned in ascending node-id order, so the lexicon is
    deterministic and only ever grows as instances are added.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    concept_ids: set[int] = set()
    for ranking in stage1_rankings.values():
        concept_ids.update(int(doc_id) for doc_id in ranking.doc_ids[:top_k])
    return Lexicon(
        entries={node_id: dim for dim, node_id in enumerate(sorted(concept_ids))},
        top_k=top_k,
    )


def vectorize(ranking: Ranking, lexicon: Lexicon) -> InstanceVector:
    """Project a stage-1 ranking onto the lexicon dimensions.

    Every ranked concept present in the lexicon contributes its score;
    concepts outside the lexicon are dropped and missing dimensions are 0.
    """
    entries: dict[int, float] = {}
    for doc_id, score in ranking.items:
        dim = lexicon.entries.get(int(doc_id))
        if dim is not None:
            entries[dim] = score
    return InstanceVector(instance_id=ranking.query_id, entries=entries)


def train_topic_models(
    vectors: Sequence[InstanceVector],
    gold: Mapping[str, frozenset[str] | set[str]],
    topics: Sequence[str],
    lexicon: Lexicon,
    config: CoordinateAscentConfig = CoordinateAscentConfig(relevance_threshold=1),
) -> list[TopicModel]:
    """Train one ranking model per topic over the lexicon dimensions.

    For each topic the topic is the query and the instances are the
    documents, graded 1 when the topic is in the instance's gold set and 0
    otherwise. Topics without both a positive and a negative instance
    cannot be trained.
    """
    size = len(lexicon)
    names = lexicon.feature_names()
    dense = {v.instance_id: v.dense(size) for v in vectors}
    models: list[TopicModel] = []
    for topic in topics:
        examples = []
        for vector in vectors:
            labels = gold.get(vector.instance_id, frozenset())
            examples.append(
                TrainingExample(
                    query_id=topic,
                    doc_id=vector.instance_id,
                    features=dense[vector.instance_id],
                    grade=1 if topic in labels else 0,
                )
            )
        positives = sum(e.grade for e in examples)
        if positives == 0:
            raise TrainingError(f"topic {topic!r} has no positive training instance")
        if positives == len(examples):
            raise TrainingError(f"topic {topic!r} has no negative training instance")
        models.append(TopicModel(topic=topic, model=train_coordinate_ascent(examples, names, config)))
    return models


def rank_images(
    models: Sequence[TopicModel], vectors: Sequence[InstanceVector]
) -> dict[str, Ranking]:
    """Rank every instance under each topic model (ties by ascending id)."""
    rankings: dict[str, Ranking] = {}
    for topic_model in models:
        size = len(topic_model.model.weights)
        candidates = [(v.instance_id, v.dense(size)) for v in vectors]
        rankings[topic_model.topic] = rank(
            topic_model.model, candidates, query_id=topic_model.topic
        )
    return rankings


def save_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(lexicon.to_json_obj(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_lexicon(path: str | Path) -> Lexicon:
    return Lexicon.from_json_obj(json.loads(Path(path).read_text(encoding="utf-8")))


def write_instance_vectors(vectors: Sequence[InstanceVector], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for vector in vectors:
            fh.write(
                json.dumps(
                    {
                        "instance_id": vector.instance_id,
                        "entries": {str(d): s for d, s in sorted(vector.entries.items())},
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_instance_vectors(path: str | Path) -> list[InstanceVector]:
    vectors = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            vectors.append(
                InstanceVector(
                    instance_id=obj["instance_id"],
                    entries={int(d): float(s) for d, s in obj["entries"].items()},
                )
            )
    return vectors
