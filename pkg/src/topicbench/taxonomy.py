"""Topic hierarchy: loading, label closure, truncation, pruning, traversal.

The taxonomy is a single-rooted tree whose synthetic root is not itself a
topic; every other node is a topic that documents may be labeled with.
Trees are immutable after construction, so all operations below return new
trees and are safe under concurrent reads.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping


class TaxonomyError(ValueError):
    """Base class for taxonomy document validation failures."""


class DuplicateTopicIdError(TaxonomyError):
    pass


class MultipleRootsError(TaxonomyError):
    pass


class DanglingParentError(TaxonomyError):
    pass


class TaxonomyCycleError(TaxonomyError):
    pass


@dataclass(frozen=True)
class TopicNode:
    id: str
    name: str
    parent: str | None
    depth: int


class TaxonomyTree:
    """Validated topic tree with parent pointers and precomputed depths.

    ``n`` counts topic nodes only; the root is excluded from every label
    set and from ``n``.
    """

    def __init__(self, nodes: Mapping[str, TopicNode], root_id: str):
        self._nodes: dict[str, TopicNode] = dict(nodes)
        self._root_id = root_id
        self._children: dict[str, list[str]] = {nid: [] for nid in self._nodes}
        for node in self._nodes.values():
            if node.parent is not None:
                self._children[node.parent].append(node.id)
        for kids in self._children.values():
            kids.sort()

    @property
    def root_id(self) -> str:
        return self._root_id

    @property
    def n(self) -> int:
        return len(self._nodes) - 1

    @property
    def max_depth(self) -> int:
        return max(node.depth for node in self._nodes.values())

    def node(self, topic_id: str) -> TopicNode:
        try:
            return self._nodes[topic_id]
        except KeyError:
            raise KeyError(f"unknown topic id: {topic_id!r}") from None

    def children(self, topic_id: str) -> list[str]:
        return list(self._children[topic_id])

    def topic_ids(self) -> list[str]:
        """All non-root topic ids, sorted."""
        return sorted(nid for nid in self._nodes if nid != self._root_id)

    def __contains__(self, topic_id: str) -> bool:
        return topic_id in self._nodes and topic_id != self._root_id

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, TaxonomyTree):
            return NotImplemented
        return self._root_id == other._root_id and self._nodes == other._nodes

    def __repr__(self) -> str:
        return f"TaxonomyTree(n={self.n}, max_depth={self.max_depth})"


def load_taxonomy(source) -> TaxonomyTree:
    """Build a validated tree from a taxonomy document.

    ``source`` may be a path to a JSON file, a JSON string, or an already
    parsed list of ``{"id", "name", "parent"}`` objects with exactly one
    null parent. Raises a distinct TaxonomyError subclass per defect
    (duplicate id, multiple roots, dangling parent, cycle).
    """
    records = _coerce_records(source)

    seen: dict[str, dict] = {}
    for rec in records:
        tid = rec["id"]
        if tid in seen:
            raise DuplicateTopicIdError(f"duplicate topic id: {tid!r}")
        seen[tid] = rec

    roots = [rec["id"] for rec in records if rec.get("parent") is None]
    if len(roots) > 1:
        raise MultipleRootsError(f"expected exactly one root, found {len(roots)}: {roots}")
    if not roots:
        raise MultipleRootsError("taxonomy document has no root node (null parent)")
    root_id = roots[0]

    for rec in records:
        parent = rec.get("parent")
        if parent is not None and parent not in seen:
            raise DanglingParentError(
                f"topic {rec['id']!r} references unknown parent {parent!r}"
            )

    depths = _compute_depths(seen, root_id)

    nodes = {
        rec["id"]: TopicNode(
            id=rec["id"],
            name=rec.get("name", rec["id"]),
            parent=rec.get("parent"),
            depth=depths[rec["id"]],
        )
        for rec in records
    }
    return TaxonomyTree(nodes, root_id)


def serialize_taxonomy(tree: TaxonomyTree) -> list[dict]:
    """Inverse of ``load_taxonomy``: a flat list of id/name/parent objects."""
    out = []
    for nid in sorted(tree._nodes):
        node = tree._nodes[nid]
        out.append({"id": node.id, "name": node.name, "parent": node.parent})
    return out


def save_taxonomy(tree: TaxonomyTree, path) -> None:
    Path(path).write_text(
        json.dumps(serialize_taxonomy(tree), indent=2, sort_keys=False) + "\n",
        encoding="utf-8",
    )


def expand_labels(tree: TaxonomyTree, assigned: str) -> frozenset[str]:
    """The assigned topic plus all its non-root ancestors.

    A document labeled with a topic is implicitly labeled with every topic
    on the path from the root down to it; the root is never a label.
    """
    if assigned == tree.root_id:
        raise ValueError("the root is not a topic and cannot be assigned")
    labels = set()
    current = tree.node(assigned)
    while current.parent is not None:
        labels.add(current.id)
        current = tree.node(current.parent)
    return frozenset(labels)


def truncate_to_level(tree: TaxonomyTree, level: int) -> TaxonomyTree:
    """Keep only nodes with depth <= level. Levels beyond max_depth are a no-op."""
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    kept = {nid: node for nid, node in tree._nodes.items() if node.depth <= level}
    return TaxonomyTree(kept, tree.root_id)


def prune_by_support(
    tree: TaxonomyTree, train_counts: Mapping[str, int], min_support: int
) -> TaxonomyTree:
    """Drop topics with fewer than ``min_support`` training examples.

    Descendants of a dropped topic are dropped with it, whatever their own
    support: a child model cannot exist without its parent in the
    parent-initialized training chain. Topics missing from ``train_counts``
    count as zero. Idempotent.
    """
    kept: dict[str, TopicNode] = {tree.root_id: tree.node(tree.root_id)}
    queue = deque(tree.children(tree.root_id))
    while queue:
        nid = queue.popleft()
        node = tree.node(nid)
        if node.parent not in kept:
            continue
        if train_counts.get(nid, 0) < min_support:
            continue
        kept[nid] = node
        queue.extend(tree.children(nid))
    return TaxonomyTree(kept, tree.root_id)


def training_order(tree: TaxonomyTree) -> list[str]:
    """Breadth-first topic order with siblings sorted by id.

    Every topic appears after its parent, which is the order the
    parent-initialized one-vs-all trainers must run in.
    """
    order: list[str] = []
    queue = deque(tree.children(tree.root_id))
    while queue:
        nid = queue.popleft()
        order.append(nid)
        queue.extend(tree.children(nid))
    return order


def _coerce_records(source) -> list[dict]:
    if isinstance(source, Path):
        records = json.loads(source.read_text(encoding="utf-8"))
    elif isinstance(source, str):
        text = source if source.lstrip().startswith("[") else Path(source).read_text(encoding="utf-8")
        records = json.loads(text)
    elif isinstance(source, Iterable):
        records = list(source)
    else:
        raise TaxonomyError(f"unsupported taxonomy source: {type(source).__name__}")
    if not isinstance(records, list):
        raise TaxonomyError("taxonomy document must be a JSON array of objects")
    for rec in records:
        if not isinstance(rec, Mapping) or "id" not in rec:
            raise TaxonomyError(f"malformed taxonomy entry: {rec!r}")
    return [dict(rec) for rec in records]


def _compute_depths(records: Mapping[str, Mapping], root_id: str) -> dict[str, int]:
    depths: dict[str, int] = {root_id: 0}
    for tid in records:
        chain: list[str] = []
        current = tid
        trail = set()
        while current not in depths:
            if current in trail:
                raise TaxonomyCycleError(f"cycle detected through topic {current!r}")
            trail.add(current)
            chain.append(current)
            current = records[current].get("parent")
        base = depths[current]
        for offset, nid in enumerate(reversed(chain), start=1):
            depths[nid] = base + offset
    return depths
