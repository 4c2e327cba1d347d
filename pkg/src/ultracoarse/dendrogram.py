"""Ultrametric <-> leveled tree: Newick and DOT export."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .metric_core import FiniteMetricSpace
from .unions import equivalence_split

_PLAIN = re.compile(r"^[A-Za-z0-9_.\-+*/|]+$")


@dataclass(frozen=True)
class Node:
    height: int
    label: str | None = None
    children: tuple["Node", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def leaves(self) -> list[str]:
        if self.is_leaf:
            return [self.label]
        return [lab for c in self.children for lab in c.leaves()]


def dendrogram(space: FiniteMetricSpace) -> Node:
    """Leaves are points; an internal node at height m joins the classes of d < m."""

    def build(idx: list[int]) -> Node:
        if len(idx) == 1:
            return Node(0, space.points[idx[0]])
        partition, m = equivalence_split(space.subspace(idx))
        return Node(int(m), None, tuple(build([idx[i] for i in b]) for b in partition.blocks))

    return build(list(range(len(space))))


def tree_distances(tree: Node, labels) -> np.ndarray:
    """Height of the lowest common ancestor for every pair of labels."""
    pos = {lab: i for i, lab in enumerate(labels)}
    out = np.zeros((len(labels), len(labels)), dtype=np.int64)

    def walk(node: Node) -> list[int]:
        if node.is_leaf:
            return [pos[node.label]]
        groups = [walk(c) for c in node.children]
        for a, ga in enumerate(groups):
            for gb in groups[a + 1:]:
                out[np.ix_(ga, gb)] = node.height
                out[np.ix_(gb, ga)] = node.height
        return [i for g in groups for i in g]

    walk(tree)
    return out


def _quote(label: str) -> str:
    if _PLAIN.match(label):
        return label
    return "'" + label.replace("'", "''") + "'"


def to_newick(tree: Node) -> str:
    def fmt(node: Node, parent_height: int | None) -> str:
        body = _quote(node.label) if node.is_leaf else "(" + ",".join(fmt(c, node.height) for c in node.children) + ")"
        return body if parent_height is None else f"{body}:{parent_height - node.height}"

    if tree.is_leaf:
        return _quote(tree.label) + ";"
    return fmt(tree, None) + ";"


def to_dot(tree: Node) -> str:
    lines = ["graph dendrogram {", "  node [shape=plaintext];"]
    counter = [0]

    def emit(node: Node) -> str:
        name = f"n{counter[0]}"
        counter[0] += 1
        text = node.label if node.is_leaf else f"h={node.height}"
        text = text.replace("\\", "\\\\").replace('"', '\\"')
        lines.append(f'  {name} [label="{text}"];')
        for child in node.children:
            cname = emit(child)
            lines.append(f'  {name} -- {cname} [label="{node.height - child.height}"];')
        return name

    emit(tree)
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_dendrogram(space: FiniteMetricSpace, fmt: str = "newick") -> str:
    tree = dendrogram(space)
    if fmt == "newick":
        return to_newick(tree) + "\n"
    if fmt == "dot":
        return to_dot(tree)
    raise ValueError(f"unknown format {fmt!r}")
