"""UFP-growth: FP-growth over a probability-annotated prefix tree.

Two transactions share a tree node only if the item *and* its existence
probability agree. Probabilities are compared after rounding to
``MERGE_DIGITS`` decimals; a node remembers the largest exact probability it
absorbed, so every expected support computed from the tree is an upper
bound. Mining therefore yields a candidate superset, which a last pass over
the database trims to the exact answer.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .report import ItemsetResult, MiningReport, RunMetrics, timed
from .udb import UncertainDatabase

MERGE_DIGITS = 4


class UFPNode:
    """Tree node.

    ``count`` is the number of transactions through the node and ``weight``
    the sum over those transactions of the (upper-bounded) probability of the
    suffix being mined; in the global tree ``weight == count``.
    """

    __slots__ = ("item", "prob", "count", "weight", "children", "parent")

    def __init__(self, item, prob, parent):
        self.item = item
        self.prob = prob
        self.count = 0
        self.weight = 0.0
        self.children = {}
        self.parent = parent

    def path(self):
        """Ancestors from the root side down to (excluding) this node."""
        out = []
        node = self.parent
        while node is not None and node.item is not None:
            out.append((node.item, node.prob))
            node = node.parent
        out.reverse()
        return out

    def __repr__(self):
        return f"UFPNode({self.item}, p={self.prob}, n={self.count})"


@dataclass
class UFPTree:
    root: UFPNode
    order: list  # [(item, esup bound)] in tree order
    header: dict = field(default_factory=dict)  # item -> [nodes]

    def insert(self, units, count: int, weight: float):
        """Add a path of ``(item, prob)`` units already in tree order."""
        node = self.root
        for item, prob in units:
            key = (item, round(prob, MERGE_DIGITS))
            child = node.children.get(key)
            if child is None:
                child = UFPNode(item, prob, node)
                node.children[key] = child
                self.header.setdefault(item, []).append(child)
            elif prob > child.prob:
                child.prob = prob
            child.count += count
            child.weight += weight
            node = child

    def nodes(self):
        stack = list(self.root.children.values())
        while stack:
            node = stack.pop()
            yield node
            stack.extend(node.children.values())


def item_order(db: UncertainDatabase, threshold: float):
    """Frequent items by descending expected support, ties by ascending id."""
    ids, esup, _ = db.item_moments()
    keep = esup >= threshold - 1e-9
    pairs = sorted(zip(ids[keep].tolist(), esup[keep].tolist()), key=lambda t: (-t[1], t[0]))
    return pairs


def build_ufp_tree(db: UncertainDatabase, min_esup: float):
    """Global UFP-tree of ``db`` and its ordered frequent-item list."""
    order = item_order(db, db.n_transactions * min_esup)
    rank = {item: r for r, (item, _) in enumerate(order)}
    tree = UFPTree(UFPNode(None, 1.0, None), order)
    items = db.items.tolist()
    probs = db.probs.tolist()
    ptr = db.indptr.tolist()
    for t in range(db.n_transactions):
        units = [(items[k], probs[k]) for k in range(ptr[t], ptr[t + 1]) if items[k] in rank]
        if units:
            units.sort(key=lambda u: rank[u[0]])
            tree.insert(units, 1, 1.0)
    return tree, order


def _mine(tree: UFPTree, suffix: tuple, threshold: float, out: list, metrics: RunMetrics):
    # process items from the bottom of the order upward
    for item, _ in reversed(tree.order):
        nodes = tree.header.get(item)
        if not nodes:
            continue
        bound = sum(n.prob * n.weight for n in nodes)
        metrics.candidates += 1
        if bound < threshold - 1e-9:
            continue
        itemset = (item,) + suffix
        out.append(itemset)
        # conditional pattern base: prefix paths weighted by the new suffix
        base = []
        cond_esup: dict = {}
        for n in nodes:
            path = n.path()
            if not path:
                continue
            w = n.prob * n.weight
            base.append((path, n.count, w))
            for it, p in path:
                cond_esup[it] = cond_esup.get(it, 0.0) + p * w
        keep = {it for it, e in cond_esup.items() if e >= threshold - 1e-9}
        if not keep:
            continue
        cond_order = [(it, cond_esup[it]) for it, _ in tree.order if it in keep]
        cond = UFPTree(UFPNode(None, 1.0, None), cond_order)
        for path, count, w in base:
            units = [(it, p) for it, p in path if it in keep]
            if units:
                cond.insert(units, count, w)
        _mine(cond, itemset, threshold, out, metrics)


def ufp_growth(db: UncertainDatabase, min_esup: float) -> MiningReport:
    """Expected-support-based frequent itemsets via conditional UFP-trees."""
    if not 0.0 < min_esup <= 1.0:
        raise ValueError(f"min_esup must lie in (0, 1], got {min_esup}")
    threshold = db.n_transactions * min_esup
    metrics = RunMetrics()
    with timed(metrics):
        tree, _ = build_ufp_tree(db, min_esup)
        candidates: list = []
        _mine(tree, (), threshold, candidates, metrics)
        results = []
        if candidates:
            index = db.vertical()
            for x in candidates:
                x = tuple(sorted(x))
                esup = float(index.containment(x).sum())
                if esup >= threshold - 1e-9:
                    results.append(ItemsetResult(x, esup))
    return MiningReport("ufp", db.n_transactions, results, metrics, threshold)
