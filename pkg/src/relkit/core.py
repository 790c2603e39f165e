"""Core scene-graph datatypes: boxes, graphs, labeled instances.

Boxes are stored in center/size form (x, y, w, h). Scene instances carry
ingested per-object and per-pair feature vectors; no pixel processing
happens anywhere in this package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import FormatError, InvalidBoxError


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box, center coordinates plus width/height."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for v in (self.x, self.y, self.w, self.h):
            if not math.isfinite(v):
                raise InvalidBoxError(f"non-finite box coordinate: {self}")
        if self.w <= 0 or self.h <= 0:
            raise InvalidBoxError(f"box width/height must be positive: {self}")

    def corners(self) -> Tuple[float, float, float, float]:
        """(x1, y1, x2, y2) corner form; used transiently for geometry."""
        return (
            self.x - self.w / 2.0,
            self.y - self.h / 2.0,
            self.x + self.w / 2.0,
            self.y + self.h / 2.0,
        )


def union_box(a: BoundingBox, b: BoundingBox) -> BoundingBox:
    """Smallest axis-aligned box covering both inputs."""
    ax1, ay1, ax2, ay2 = a.corners()
    bx1, by1, bx2, by2 = b.corners()
    x1, y1 = min(ax1, bx1), min(ay1, by1)
    x2, y2 = max(ax2, bx2), max(ay2, by2)
    return BoundingBox(x=(x1 + x2) / 2.0, y=(y1 + y2) / 2.0, w=x2 - x1, h=y2 - y1)


@dataclass(frozen=True)
class SceneGraph:
    """Directed graph: labeled boxes plus (subject, object, predicate) edges."""

    objects: Tuple[Tuple[int, BoundingBox], ...]
    edges: Tuple[Tuple[int, int, int], ...]

    @staticmethod
    def make(objects: Sequence[Tuple[int, BoundingBox]],
             edges: Sequence[Tuple[int, int, int]]) -> "SceneGraph":
        return SceneGraph(tuple((int(l), b) for l, b in objects),
                          tuple((int(s), int(o), int(p)) for s, o, p in edges))

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    def boxes(self) -> List[BoundingBox]:
        return [b for _, b in self.objects]

    def labels(self) -> List[int]:
        return [l for l, _ in self.objects]


@dataclass(frozen=True)
class SceneInstance:
    """One training/evaluation example: graph plus ingested feature vectors."""

    graph: SceneGraph
    object_features: Tuple[Tuple[float, ...], ...] = ()
    pair_features: Tuple[Tuple[Tuple[int, int], Tuple[float, ...]], ...] = ()

    @staticmethod
    def make(graph: SceneGraph,
             object_features: Sequence[Sequence[float]] = (),
             pair_features: Dict[Tuple[int, int], Sequence[float]] | None = None
             ) -> "SceneInstance":
        pf = pair_features or {}
        return SceneInstance(
            graph,
            tuple(tuple(float(v) for v in row) for row in object_features),
            tuple(sorted(((int(s), int(o)), tuple(float(v) for v in vec))
                         for (s, o), vec in pf.items())),
        )

    def object_feature_matrix(self) -> np.ndarray:
        return np.asarray(self.object_features, dtype=np.float64)

    def pair_feature_map(self) -> Dict[Tuple[int, int], np.ndarray]:
        return {k: np.asarray(v, dtype=np.float64) for k, v in self.pair_features}


@dataclass(frozen=True)
class Vocabulary:
    """Ordered unique labels with per-label occurrence counts."""

    labels: Tuple[str, ...]
    counts: Tuple[int, ...]

    def __post_init__(self):
        if len(self.labels) != len(set(self.labels)):
            raise FormatError("vocabulary labels must be unique")
        if len(self.labels) != len(self.counts):
            raise FormatError("vocabulary labels/counts length mismatch")
        if any(c < 0 for c in self.counts):
            raise FormatError("vocabulary counts must be >= 0")

    @staticmethod
    def make(items: Sequence[Tuple[str, int]]) -> "Vocabulary":
        return Vocabulary(tuple(l for l, _ in items), tuple(int(c) for _, c in items))

    def __len__(self) -> int:
        return len(self.labels)

    def index(self) -> Dict[str, int]:
        return {l: i for i, l in enumerate(self.labels)}

    def count_of(self, label: str) -> int:
        return self.counts[self.labels.index(label)]


def validate_scene(instance: SceneInstance) -> List[str]:
    """Check all type invariants; returns one message per violation."""
    violations: List[str] = []
    g = instance.graph
    n = g.n_objects
    for i, (label, box) in enumerate(g.objects):
        if box.w <= 0 or box.h <= 0:
            violations.append(f"objects[{i}].box: width and height must be positive")
        if not all(math.isfinite(v) for v in (box.x, box.y, box.w, box.h)):
            violations.append(f"objects[{i}].box: coordinates must be finite")
        if label < 0:
            violations.append(f"objects[{i}].label: must be >= 0")
    seen_pairs = set()
    for k, (s, o, p) in enumerate(g.edges):
        if not (0 <= s < n and 0 <= o < n):
            violations.append(f"edges[{k}]: endpoint index out of range")
            continue
        if s == o:
            violations.append(f"edges[{k}]: subject index equals object index")
        if (s, o) in seen_pairs:
            violations.append(f"edges[{k}]: duplicate ({s}, {o}) edge")
        seen_pairs.add((s, o))
        if p < 0:
            violations.append(f"edges[{k}].predicate: must be >= 0")
    if instance.object_features:
        if len(instance.object_features) != n:
            violations.append("object_features: need exactly one feature per object")
        dims = {len(row) for row in instance.object_features}
        if len(dims) > 1:
            violations.append("object_features: feature dimensions must be uniform")
    for (s, o), vec in instance.pair_features:
        if not (0 <= s < n and 0 <= o < n) or s == o:
            violations.append(f"pair_features[{s},{o}]: invalid ordered pair")
        if not all(math.isfinite(v) for v in vec):
            violations.append(f"pair_features[{s},{o}]: non-finite entry")
    return violations


# ---------------------------------------------------------------------------
# JSON serialization: one document per instance.
# {"objects":[{"label":int,"box":[x,y,w,h]}...], "edges":[[s,o,p]...],
#  "object_features":[[...]...], "pair_features":{"s,o":[...]}}
# Feature fields are optional on read.
# ---------------------------------------------------------------------------

def scene_to_dict(instance: SceneInstance) -> dict:
    g = instance.graph
    doc = {
        "objects": [{"label": l, "box": [b.x, b.y, b.w, b.h]} for l, b in g.objects],
        "edges": [[s, o, p] for s, o, p in g.edges],
    }
    if instance.object_features:
        doc["object_features"] = [list(row) for row in instance.object_features]
    if instance.pair_features:
        doc["pair_features"] = {f"{s},{o}": list(v) for (s, o), v in instance.pair_features}
    return doc


def scene_from_dict(doc: dict) -> SceneInstance:
    try:
        objects = [(int(o["label"]), BoundingBox(*map(float, o["box"])))
                   for o in doc["objects"]]
        edges = [tuple(map(int, e)) for e in doc.get("edges", [])]
        feats = doc.get("object_features", [])
        pairs = {}
        for key, vec in doc.get("pair_features", {}).items():
            s, o = key.split(",")
            pairs[(int(s), int(o))] = [float(v) for v in vec]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed scene document: {exc}") from exc
    return SceneInstance.make(SceneGraph.make(objects, edges), feats, pairs)


def save_scenes(instances: Sequence[SceneInstance], path) -> None:
    with open(path, "w") as fh:
        for inst in instances:
            fh.write(json.dumps(scene_to_dict(inst), sort_keys=True) + "\n")


def load_scenes(path) -> List[SceneInstance]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            out.append(scene_from_dict(doc))
    return out
