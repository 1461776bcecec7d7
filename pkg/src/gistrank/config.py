"""Pipeline configuration: flat key=value files with namespaced keys.

Relative paths are resolved against the config file's directory. Training
seeds default to deterministic offsets of the master ``seed`` so a single
key reproduces a whole run; any of them can be overridden individually.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .evaluation import MODES
from .ltr import CoordinateAscentConfig

_TRAIN_KEYS = ("restarts", "step_base", "step_levels", "min_gain", "seed", "relevance_threshold")


@dataclass(frozen=True)
class PipelineConfig:
    kg_nodes: Path
    kg_edges: Path
    corpus: Path
    out: Path
    mode: str = "TII"
    top_k: int = 10
    eval_k: int = 50
    seed: int = 7
    split_ratio: float = 0.6
    split_seed: int | None = None
    cluster_seed: int | None = None
    workers: int = 1
    image_labels: Path | None = None
    train1: CoordinateAscentConfig = field(default_factory=CoordinateAscentConfig)
    train2: CoordinateAscentConfig = field(
        default_factory=lambda: CoordinateAscentConfig(relevance_threshold=1)
    )

    def resolved_split_seed(self) -> int:
        return self.split_seed if self.split_seed is not None else self.seed + 1

    def resolved_cluster_seed(self) -> int:
        return self.cluster_seed if self.cluster_seed is not None else self.seed + 4

    def validate(self) -> None:
        for name, path in (("kg.nodes", self.kg_nodes), ("kg.edges", self.kg_edges), ("corpus", self.corpus)):
            if not path.is_file():
                raise ConfigError(f"{name}: file not found: {path}")
        if self.image_labels is not None and not self.image_labels.is_file():
            raise ConfigError(f"image_labels: file not found: {self.image_labels}")
        if self.mode not in MODES:
            raise ConfigError(f"mode: must be one of {'/'.join(MODES)}, got {self.mode!r}")
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError(f"split.ratio: must be strictly between 0 and 1, got {self.split_ratio}")
        if self.top_k < 1:
            raise ConfigError("top_k: must be >= 1")
        if self.eval_k < 1:
            raise ConfigError("eval.k: must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers: must be >= 1")
        for prefix, train in (("train1", self.train1), ("train2", self.train2)):
            if train.restarts < 1:
                raise ConfigError(f"{prefix}.restarts: must be >= 1")
            if train.step_levels < 1:
                raise ConfigError(f"{prefix}.step_levels: must be >= 1")
            if train.step_base <= 0:
                raise ConfigError(f"{prefix}.step_base: must be > 0")

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()[:16]

    def canonical_text(self) -> str:
        items = {
            "kg.nodes": str(self.kg_nodes),
            "kg.edges": str(self.kg_edges),
            "corpus": str(self.corpus),
            "out": str(self.out),
            "mode": self.mode,
            "top_k": str(self.top_k),
            "eval.k": str(self.eval_k),
            "seed": str(self.seed),
            "split.ratio": repr(self.split_ratio),
            "split.seed": str(self.resolved_split_seed()),
            "cluster.seed": str(self.resolved_cluster_seed()),
            "workers": str(self.workers),
            "image_labels": str(self.image_labels) if self.image_labels else "",
        }
        for prefix, train in (("train1", self.train1), ("train2", self.train2)):
            for key in _TRAIN_KEYS:
                items[f"{prefix}.{key}"] = repr(getattr(train, key))
        return "\n".join(f"{k}={v}" for k, v in sorted(items.items()))


def _parse_scalar(key: str, raw: str, kind: type):
    try:
        if kind is bool:
            return raw.lower() in ("1", "true", "yes")
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {raw!r}") from None


def load_config(path: str | Path, overrides: dict[str, str] | None = None) -> PipelineConfig:
    """Parse a key=value config file, apply overrides, and validate it."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values: dict[str, str] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    values.update(overrides or {})

    base = path.parent

    def path_of(key: str, default: str | None = None) -> Path:
        raw = values.pop(key, default)
        if raw is None:
            raise ConfigError(f"{key}: required key is missing")
        p = Path(raw)
        return p if p.is_absolute() else (base / p)

    def scalar(key: str, kind: type, default):
        raw = values.pop(key, None)
        return default if raw is None else _parse_scalar(key, raw, kind)

    def train_config(prefix: str, default_threshold: int, default_seed: int) -> CoordinateAscentConfig:
        return CoordinateAscentConfig(
            restarts=scalar(f"{prefix}.restarts", int, 5),
            step_base=scalar(f"{prefix}.step_base", float, 0.05),
            step_levels=scalar(f"{prefix}.step_levels", int, 10),
            min_gain=scalar(f"{prefix}.min_gain", float, 1e-6),
            seed=scalar(f"{prefix}.seed", int, default_seed),
            relevance_threshold=scalar(f"{prefix}.relevance_threshold", int, default_threshold),
        )

    kg_nodes = path_of("kg.nodes")
    kg_edges = path_of("kg.edges")
    corpus = path_of("corpus")
    out = path_of("out", "out")
    image_labels = path_of("image_labels") if "image_labels" in values else None

    seed = scalar("seed", int, 7)
    train1 = train_config("train1", 4, seed + 2)
    train2 = train_config("train2", 1, seed + 3)

    config = PipelineConfig(
        kg_nodes=kg_nodes,
        kg_edges=kg_edges,
        corpus=corpus,
        out=out,
        mode=values.pop("mode", "TII"),
        top_k=scalar("top_k", int, 10),
        eval_k=scalar("eval.k", int, 50),
        seed=seed,
        split_ratio=scalar("split.ratio", float, 0.6),
        split_seed=scalar("split.seed", int, None),
        cluster_seed=scalar("cluster.seed", int, None),
        workers=scalar("workers", int, 1),
        image_labels=image_labels,
        train1=train1,
        train2=train2,
    )
    if values:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(values))}")
    config.validate()
    return config
