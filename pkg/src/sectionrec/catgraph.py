"""Category network: construction, cycle breaking, purity scoring, pruning.

The network is a directed graph over category ids with child -> parent
edges (an edge means "child is a subcategory of parent"). Articles attach
to categories through a membership map. Pruning removes categories whose
aggregated member-type histogram is too evenly spread across entity types
to describe a coherent set of things, which is what makes the transitive
closure safe to use for section counting.
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import FormatError

__all__ = [
    "CategoryGraph",
    "PrunedGraph",
    "SweepRow",
    "TypeMap",
    "UndefinedPurityError",
    "break_cycles",
    "closure_members",
    "gini",
    "load_category_file",
    "load_pruned",
    "load_type_map",
    "prune",
    "restrict_to_root",
    "save_category_file",
    "save_pruned",
    "save_type_map",
    "threshold_sweep",
    "type_histogram",
]


class UndefinedPurityError(ValueError):
    """Purity of an all-zero histogram is undefined."""


class CategoryGraph:
    """Directed category network with article memberships.

    Parameters
    ----------
    names : mapping of category id to display name.
    edges : iterable of (child_id, parent_id) pairs. Both endpoints must
        be present in ``names``. Duplicate edges collapse to one.
    memberships : mapping of article id to the set of category ids the
        article is directly assigned to. References to unknown categories
        are dropped silently here; loaders count them before building.
    root : optional id of the root category used by :func:`restrict_to_root`.
    """

    def __init__(
        self,
        names: Mapping[int, str],
        edges: Iterable[tuple[int, int]] = (),
        memberships: Mapping[int, Iterable[int]] | None = None,
        root: int | None = None,
    ):
        self.names: dict[int, str] = dict(names)
        if root is not None and root not in self.names:
            raise ValueError(f"root category {root} is not a node of the graph")
        self.root = root
        self.parents: dict[int, set[int]] = {n: set() for n in self.names}
        self.children: dict[int, set[int]] = {n: set() for n in self.names}
        for child, parent in edges:
            if child not in self.names or parent not in self.names:
                raise ValueError(f"edge ({child}, {parent}) references an unknown category")
            self.parents[child].add(parent)
            self.children[parent].add(child)
        self.memberships: dict[int, set[int]] = {}
        if memberships:
            for article, cats in memberships.items():
                known = {c for c in cats if c in self.names}
                if known:
                    self.memberships[article] = known
        self._members_by_category: dict[int, set[int]] | None = None

    def nodes(self) -> list[int]:
        return sorted(self.names)

    def edges(self) -> list[tuple[int, int]]:
        return sorted((c, p) for c, ps in self.parents.items() for p in ps)

    @property
    def n_nodes(self) -> int:
        return len(self.names)

    @property
    def n_edges(self) -> int:
        return sum(len(ps) for ps in self.parents.values())

    def members_by_category(self) -> dict[int, set[int]]:
        """Inverted membership map, computed once and cached."""
        if self._members_by_category is None:
            inverted: dict[int, set[int]] = {}
            for article, cats in self.memberships.items():
                for c in cats:
                    inverted.setdefault(c, set()).add(article)
            self._members_by_category = inverted
        return self._members_by_category

    def subgraph(self, keep: set[int], drop_edges: set[tuple[int, int]] = frozenset()) -> "CategoryGraph":
        """New graph restricted to ``keep`` nodes, minus ``drop_edges``."""
        names = {n: self.names[n] for n in keep}
        edges = [
            (c, p)
            for c, p in self.edges()
            if c in keep and p in keep and (c, p) not in drop_edges
        ]
        memberships = {a: cats & keep for a, cats in self.memberships.items() if cats & keep}
        root = self.root if self.root in keep else None
        return CategoryGraph(names, edges, memberships, root)


@dataclass(frozen=True)
class TypeMap:
    """Entity-type assignment: article id -> index into a fixed type universe.

    Articles absent from ``types`` have no known type; they contribute
    nothing to histograms but still count as category members.
    """

    types: dict[int, int]
    universe: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.universe)


@dataclass(frozen=True)
class PrunedGraph:
    """Result of purity pruning: the surviving network plus per-node scores."""

    graph: CategoryGraph
    purity: dict[int, float]
    histograms: dict[int, np.ndarray]
    closure_size: dict[int, int]
    removed: frozenset[int]
    threshold: float
    universe_size: int

    @property
    def survivors(self) -> set[int]:
        return set(self.graph.names)


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    precision: float
    recall: float
    removed_fraction: float
    precision_defined: bool


def restrict_to_root(graph: CategoryGraph, root: int | None = None) -> CategoryGraph:
    """Keep exactly the nodes from which ``root`` is reachable via child -> parent edges.

    This is the root's subtree in the subcategory sense: every kept node
    is a (transitive) subcategory of the root, plus the root itself.
    Disconnected portions (maintenance trees, dangling ids) are dropped
    together with their memberships and incident edges.
    """
    if root is None:
        root = graph.root
    if root is None or root not in graph.names:
        raise ValueError(f"root category {root!r} is not a node of the graph")
    keep = {root}
    queue = deque([root])
    while queue:
        node = queue.popleft()
        for child in graph.children[node]:
            if child not in keep:
                keep.add(child)
                queue.append(child)
    out = graph.subgraph(keep)
    out.root = root
    return out


def break_cycles(graph: CategoryGraph) -> tuple[CategoryGraph, list[tuple[int, int]]]:
    """Delete a small feedback arc set so the category network becomes acyclic.

    Greedy vertex-ordering heuristic: sinks are peeled to the right end of
    the order, sources to the left, and when neither exists the vertex
    maximizing outdegree - indegree is peeled to the left. Edges pointing
    right-to-left in the final order (and self-loops) form the feedback
    set and are deleted. All choices break ties by ascending id, so the
    result is deterministic.

    Returns the acyclic graph and the sorted list of removed edges.
    """
    succ = {n: set(ps) for n, ps in graph.parents.items()}
    pred = {n: set(cs) for n, cs in graph.children.items()}
    self_loops = sorted((n, n) for n in succ if n in succ[n])
    for n, _ in self_loops:
        succ[n].discard(n)
        pred[n].discard(n)

    remaining = set(graph.names)
    left: list[int] = []
    right: deque[int] = deque()

    def peel(node: int) -> None:
        for p in pred[node]:
            succ[p].discard(node)
        for s in succ[node]:
            pred[s].discard(node)
        remaining.discard(node)

    while remaining:
        progressed = True
        while progressed:
            progressed = False
            sinks = [n for n in remaining if not succ[n]]
            if sinks:
                node = min(sinks)
                right.appendleft(node)
                peel(node)
                progressed = True
                continue
            sources = [n for n in remaining if not pred[n]]
            if sources:
                node = min(sources)
                left.append(node)
                peel(node)
                progressed = True
        if remaining:
            # neither sinks nor sources: greedily order the most source-like vertex
            node = min(remaining, key=lambda n: (len(pred[n]) - len(succ[n]), n))
            left.append(node)
            peel(node)

    position = {n: i for i, n in enumerate(left + list(right))}
    backward = [
        (c, p)
        for c, p in graph.edges()
        if c != p and position[p] < position[c]
    ]
    removed = sorted(self_loops + backward)
    dag = graph.subgraph(set(graph.names), drop_edges=set(removed))
    return dag, removed


def closure_members(graph: CategoryGraph, category: int) -> frozenset[int]:
    """Articles directly in ``category`` or in any category below it.

    "Below" means any node from which ``category`` is reachable via
    child -> parent edges, i.e. the transitive subcategories. The graph is
    expected to be acyclic (run :func:`break_cycles` first); the traversal
    itself tolerates cycles.
    """
    if category not in graph.names:
        raise ValueError(f"unknown category {category}")
    members = graph.members_by_category()
    out: set[int] = set()
    seen = {category}
    queue = deque([category])
    while queue:
        node = queue.popleft()
        out |= members.get(node, set())
        for child in graph.children[node]:
            if child not in seen:
                seen.add(child)
                queue.append(child)
    return frozenset(out)


def gini(hist: np.ndarray | Sequence[float]) -> float:
    """Purity of a type histogram as the Gini coefficient over all bins.

        G = sum_ij |x_i - x_j| / (2 * n * sum_i x_i)

    computed over the full fixed type universe, zero bins included. Mass
    concentrated in one bin gives (n-1)/n; a perfectly even spread gives
    0. Low values therefore mean an impure, catch-all category.

    Raises :class:`UndefinedPurityError` on an all-zero histogram and
    ``ValueError`` on negative counts.
    """
    x = np.asarray(hist, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"histogram must be one-dimensional, got shape {x.shape}")
    if np.any(x < 0):
        raise ValueError("histogram counts must be non-negative")
    total = float(x.sum())
    if total == 0.0:
        raise UndefinedPurityError("purity of an all-zero histogram is undefined")
    n = x.size
    ordered = np.sort(x)
    # sum_ij |x_i - x_j| = 2 * sum_k (2k - n - 1) * x_(k) for 1-based ascending k
    coeffs = 2.0 * np.arange(1, n + 1, dtype=np.float64) - n - 1
    return float(np.dot(coeffs, ordered) / (n * total))


def type_histogram(article_ids: Iterable[int], type_map: TypeMap) -> np.ndarray:
    """Count entity types over a set of articles; unknown-type articles add nothing."""
    hist = np.zeros(type_map.size, dtype=np.int64)
    for article in article_ids:
        t = type_map.types.get(article)
        if t is not None:
            hist[t] += 1
    return hist


def prune(graph: CategoryGraph, type_map: TypeMap, threshold: float) -> PrunedGraph:
    """Remove impure categories, propagating member types bottom-up.

    Every node is evaluated exactly once, children before parents. A
    node's histogram is its direct members' types plus the returned
    histograms of its surviving children; removed children return an
    empty histogram, so their mass never reaches an ancestor. The node
    survives when ``gini(hist) > threshold``; threshold 0 switches the
    purity filter off entirely. Nodes whose histogram is all-zero (no
    typed article anywhere below) are impure by convention and removed
    at any threshold.

    Requires an acyclic graph; raises ``ValueError`` if a cycle remains.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    members = graph.members_by_category()
    pending = {n: len(graph.children[n]) for n in graph.names}
    ready = [n for n, count in pending.items() if count == 0]
    heapq.heapify(ready)

    hists: dict[int, np.ndarray] = {}
    purity: dict[int, float] = {}
    removed: set[int] = set()
    processed = 0
    while ready:
        node = heapq.heappop(ready)
        processed += 1
        hist = type_histogram(members.get(node, ()), type_map)
        for child in graph.children[node]:
            if child not in removed:
                hist += hists[child]
        if hist.sum() > 0:
            g = gini(hist)
            # threshold 0 disables the purity filter: every positive-mass
            # node survives, including a perfectly even histogram (G = 0)
            keep = g > threshold or threshold == 0.0
        else:
            g, keep = 0.0, False
        if keep:
            hists[node] = hist
            purity[node] = g
        else:
            removed.add(node)
        for parent in graph.parents[node]:
            pending[parent] -= 1
            if pending[parent] == 0:
                heapq.heappush(ready, parent)
    if processed != len(graph.names):
        raise ValueError("graph has cycles; run break_cycles before prune")

    survivors = set(graph.names) - removed
    pruned_graph = graph.subgraph(survivors)
    closure_size = {n: len(closure_members(pruned_graph, n)) for n in survivors}
    return PrunedGraph(
        graph=pruned_graph,
        purity=purity,
        histograms=hists,
        closure_size=closure_size,
        removed=frozenset(removed),
        threshold=threshold,
        universe_size=type_map.size,
    )


def threshold_sweep(
    graph: CategoryGraph,
    type_map: TypeMap,
    annotations: Sequence[tuple[int, int, int]],
    thresholds: Sequence[float],
) -> list[SweepRow]:
    """Precision/recall of closure membership against annotations, per threshold.

    Each annotation is (article_id, category_id, label) answering "is this
    article a member of this category?". After pruning at a threshold, the
    pair is predicted positive when the category survived and the article
    is in its transitive closure. A threshold that removes everything has
    no positive predictions; its precision is reported as 0.0 with
    ``precision_defined=False``.
    """
    if not annotations:
        raise ValueError("annotation set is empty")
    positives = sum(1 for _, _, label in annotations if label)
    if positives == 0:
        raise ValueError("annotation set has no positive labels")
    rows = []
    for t in thresholds:
        pruned = prune(graph, type_map, t)
        closures: dict[int, frozenset[int]] = {}
        tp = fp = 0
        for article, category, label in annotations:
            if category in pruned.survivors:
                if category not in closures:
                    closures[category] = closure_members(pruned.graph, category)
                predicted = article in closures[category]
            else:
                predicted = False
            if predicted:
                if label:
                    tp += 1
                else:
                    fp += 1
        defined = (tp + fp) > 0
        rows.append(
            SweepRow(
                threshold=float(t),
                precision=tp / (tp + fp) if defined else 0.0,
                recall=tp / positives,
                removed_fraction=len(pruned.removed) / max(1, graph.n_nodes),
                precision_defined=defined,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# file formats


def load_category_file(path: str | Path) -> tuple[dict[int, str], list[tuple[int, int]], int]:
    """Parse a category file into (names, edges, malformed_line_count).

    The file holds a ``#categories`` section of ``id<TAB>name`` lines and
    an ``#edges`` section of ``child_id<TAB>parent_id`` lines. Lines that
    fail to parse (or edges naming unknown ids) are counted as malformed;
    more than 1% malformed lines raises :class:`FormatError`.
    """
    names: dict[int, str] = {}
    edges: list[tuple[int, int]] = []
    malformed = 0
    considered = 0
    section = "categories"
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line == "#categories":
            section = "categories"
            continue
        if line == "#edges":
            section = "edges"
            continue
        if not line.strip() or line.startswith("#"):
            continue
        considered += 1
        parts = line.split("\t")
        if section == "categories":
            if len(parts) == 2:
                try:
                    names[int(parts[0])] = parts[1]
                    continue
                except ValueError:
                    pass
            malformed += 1
        else:
            if len(parts) == 2:
                try:
                    child, parent = int(parts[0]), int(parts[1])
                except ValueError:
                    malformed += 1
                    continue
                if child in names and parent in names:
                    edges.append((child, parent))
                else:
                    malformed += 1
            else:
                malformed += 1
    if considered and malformed > 0.01 * considered:
        raise FormatError(
            f"{path}: {malformed} of {considered} lines are malformed (more than 1%)"
        )
    return names, edges, malformed


def save_category_file(
    names: Mapping[int, str],
    edges: Iterable[tuple[int, int]],
    path: str | Path,
    header_lines: Iterable[str] = (),
) -> None:
    lines = [f"# {h}" for h in header_lines]
    lines.append("#categories")
    lines.extend(f"{i}\t{names[i]}" for i in sorted(names))
    lines.append("#edges")
    lines.extend(f"{c}\t{p}" for c, p in sorted(edges))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_type_map(path: str | Path) -> tuple[TypeMap, int]:
    """Parse a type file into (TypeMap, malformed_line_count).

    Sections: ``#universe`` with ``type_id<TAB>type_name`` lines (ids must
    be 0..U-1), then ``#map`` with ``article_id<TAB>type_id`` lines.
    """
    universe: dict[int, str] = {}
    types: dict[int, int] = {}
    malformed = 0
    considered = 0
    section = "universe"
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line == "#universe":
            section = "universe"
            continue
        if line == "#map":
            section = "map"
            continue
        if not line.strip() or line.startswith("#"):
            continue
        considered += 1
        parts = line.split("\t")
        if len(parts) != 2:
            malformed += 1
            continue
        try:
            if section == "universe":
                universe[int(parts[0])] = parts[1]
            else:
                article, type_id = int(parts[0]), int(parts[1])
                if type_id in universe:
                    types[article] = type_id
                else:
                    malformed += 1
        except ValueError:
            malformed += 1
    if considered and malformed > 0.01 * considered:
        raise FormatError(
            f"{path}: {malformed} of {considered} lines are malformed (more than 1%)"
        )
    if sorted(universe) != list(range(len(universe))):
        raise FormatError(f"{path}: universe type ids must be contiguous from 0")
    names = tuple(universe[i] for i in range(len(universe)))
    return TypeMap(types=types, universe=names), malformed


def save_type_map(type_map: TypeMap, path: str | Path, header_lines: Iterable[str] = ()) -> None:
    lines = [f"# {h}" for h in header_lines]
    lines.append("#universe")
    lines.extend(f"{i}\t{name}" for i, name in enumerate(type_map.universe))
    lines.append("#map")
    lines.extend(f"{a}\t{t}" for a, t in sorted(type_map.types.items()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_pruned(pruned: PrunedGraph, path: str | Path, header_lines: Iterable[str] = ()) -> None:
    """Persist surviving nodes (id, purity, closure size), edges, and removed ids."""
    lines = [f"# {h}" for h in header_lines]
    lines.append(f"# threshold={pruned.threshold!r}")
    lines.append(f"# universe_size={pruned.universe_size}")
    lines.append("#nodes")
    lines.extend(
        f"{n}\t{pruned.purity[n]!r}\t{pruned.closure_size[n]}"
        for n in sorted(pruned.graph.names)
    )
    lines.append("#edges")
    lines.extend(f"{c}\t{p}" for c, p in pruned.graph.edges())
    lines.append("#removed")
    lines.extend(str(n) for n in sorted(pruned.removed))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_pruned(path: str | Path, base_graph: CategoryGraph) -> PrunedGraph:
    """Rebuild a PrunedGraph from disk, taking names and memberships from ``base_graph``.

    Aggregated histograms are not persisted; the loaded object carries
    purity and closure sizes, which is what downstream stages consume.
    """
    purity: dict[int, float] = {}
    closure_size: dict[int, int] = {}
    edges: list[tuple[int, int]] = []
    removed: set[int] = set()
    threshold = 0.0
    universe_size = 0
    section = None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line in ("#nodes", "#edges", "#removed"):
            section = line[1:]
            continue
        if line.startswith("# threshold="):
            threshold = float(line.split("=", 1)[1])
            continue
        if line.startswith("# universe_size="):
            universe_size = int(line.split("=", 1)[1])
            continue
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if section == "nodes":
            node = int(parts[0])
            purity[node] = float(parts[1])
            closure_size[node] = int(parts[2])
        elif section == "edges":
            edges.append((int(parts[0]), int(parts[1])))
        elif section == "removed":
            removed.add(int(parts[0]))
        else:
            raise FormatError(f"{path}: data before a section marker: {line!r}")
    keep = set(purity)
    names = {n: base_graph.names.get(n, str(n)) for n in keep}
    memberships = {
        a: cats & keep for a, cats in base_graph.memberships.items() if cats & keep
    }
    root = base_graph.root if base_graph.root in keep else None
    graph = CategoryGraph(names, edges, memberships, root)
    return PrunedGraph(
        graph=graph,
        purity=purity,
        histograms={},
        closure_size=closure_size,
        removed=frozenset(removed),
        threshold=threshold,
        universe_size=universe_size,
    )


def save_annotations(
    annotations: Sequence[tuple[int, int, int]], path: str | Path, header_lines: Iterable[str] = ()
) -> None:
    """Membership judgments as ``article_id<TAB>category_id<TAB>label`` lines."""
    lines = [f"# {h}" for h in header_lines]
    lines.extend(f"{a}\t{c}\t{label}" for a, c, label in annotations)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_annotations(path: str | Path) -> list[tuple[int, int, int]]:
    annotations = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        a, c, label = line.split("\t")
        if label not in ("0", "1"):
            raise FormatError(f"{path}: label must be 0 or 1, got {label!r}")
        annotations.append((int(a), int(c), int(label)))
    return annotations
