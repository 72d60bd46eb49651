"""Plan comparison metrics and result aggregation.

Graph edit distance uses unit costs for node and edge insertion/deletion and
a zero/one node substitution cost keyed on the agent label. Small instances
(up to 12 nodes on both sides) are solved exactly by branch and bound; larger
ones fall back to a greedy upper bound flagged as inexact. Node identity
never matters to GED: plans that differ only by id renumbering are at
distance zero.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping

from .model import Plan, SubgraphSelection, node_data_equal

EXACT_NODE_LIMIT = 12


@dataclass(frozen=True)
class GedCostModel:
    node_insert: float = 1.0
    node_delete: float = 1.0
    node_substitute_same: float = 0.0
    node_substitute_diff: float = 1.0
    edge_insert: float = 1.0
    edge_delete: float = 1.0


DEFAULT_COST_MODEL = GedCostModel()


@dataclass(frozen=True)
class GedResult:
    value: float
    exact: bool


@dataclass(frozen=True)
class _Graph:
    labels: tuple[str, ...]
    adj: Mapping[tuple[int, int], int]


def _graph_of(plan: Plan) -> _Graph:
    index = {node_id: k for k, node_id in enumerate(plan.nodes)}
    adj: dict[tuple[int, int], int] = {}
    for e in plan.edges:
        key = (index[e.src_node], index[e.dest_node])
        adj[key] = adj.get(key, 0) + 1
    labels = tuple(n.agent.value for n in plan.nodes.values())
    return _Graph(labels=labels, adj=adj)


def _node_cost(model: GedCostModel, la: str, lb: str) -> float:
    return model.node_substitute_same if la == lb else model.node_substitute_diff


def _mapping_cost(
    ga: _Graph, gb: _Graph, assign: list[int | None], model: GedCostModel
) -> float:
    """Exact cost of one complete assignment (None means delete)."""
    na, nb = len(ga.labels), len(gb.labels)
    used = {j for j in assign if j is not None}
    cost = 0.0
    for i, j in enumerate(assign):
        if j is None:
            cost += model.node_delete
        else:
            cost += _node_cost(model, ga.labels[i], gb.labels[j])
    cost += model.node_insert * (nb - len(used))

    for (i, k), m in ga.adj.items():
        ji, jk = assign[i], assign[k]
        mb = gb.adj.get((ji, jk), 0) if ji is not None and jk is not None else 0
        if m > mb:
            cost += model.edge_delete * (m - mb)
    inverse: dict[int, int] = {j: i for i, j in enumerate(assign) if j is not None}
    for (j, l), m in gb.adj.items():
        if j not in inverse or l not in inverse:
            cost += model.edge_insert * m
            continue
        ma = ga.adj.get((inverse[j], inverse[l]), 0)
        if m > ma:
            cost += model.edge_insert * (m - ma)
    return cost


def _greedy_assignment(ga: _Graph, gb: _Graph) -> list[int | None]:
    """Pair vertices with equal labels by degree signature, rest deleted."""
    na, nb = len(ga.labels), len(gb.labels)

    def signature(g: _Graph, i: int) -> tuple:
        out_deg = sum(m for (p, _), m in g.adj.items() if p == i)
        in_deg = sum(m for (_, q), m in g.adj.items() if q == i)
        return (-out_deg - in_deg, -out_deg, i)

    assign: list[int | None] = [None] * na
    used: set[int] = set()
    labels = sorted(set(ga.labels) | set(gb.labels))
    for label in labels:
        ai = sorted((i for i in range(na) if ga.labels[i] == label), key=lambda i: signature(ga, i))
        bj = sorted((j for j in range(nb) if gb.labels[j] == label), key=lambda j: signature(gb, j))
        for i, j in zip(ai, bj):
            assign[i] = j
            used.add(j)
    return assign


def _label_lower_bound(
    rem_a: list[str], rem_b: list[str], model: GedCostModel
) -> float:
    if not rem_a and not rem_b:
        return 0.0
    counts_a: dict[str, int] = {}
    counts_b: dict[str, int] = {}
    for l in rem_a:
        counts_a[l] = counts_a.get(l, 0) + 1
    for l in rem_b:
        counts_b[l] = counts_b.get(l, 0) + 1
    matchable = sum(min(c, counts_b.get(l, 0)) for l, c in counts_a.items())
    unit = min(
        model.node_delete,
        model.node_insert,
        model.node_substitute_diff,
    )
    return unit * (max(len(rem_a), len(rem_b)) - matchable)


def _exact_ged(ga: _Graph, gb: _Graph, model: GedCostModel, seed_bound: float) -> float:
    na, nb = len(ga.labels), len(gb.labels)
    order = sorted(
        range(na),
        key=lambda i: -(
            sum(m for (p, _), m in ga.adj.items() if p == i)
            + sum(m for (_, q), m in ga.adj.items() if q == i)
        ),
    )
    best = seed_bound

    out_a: dict[int, dict[int, int]] = {i: {} for i in range(na)}
    in_a: dict[int, dict[int, int]] = {i: {} for i in range(na)}
    for (i, k), m in ga.adj.items():
        out_a[i][k] = m
        in_a[k][i] = m

    def completion_cost(used_b: set[int]) -> float:
        cost = model.node_insert * (nb - len(used_b))
        for (j, l), m in gb.adj.items():
            if j not in used_b or l not in used_b:
                cost += model.edge_insert * m
        return cost

    def recurse(pos: int, assign: dict[int, int | None], used_b: set[int], cost: float) -> None:
        nonlocal best
        rem_a = [ga.labels[i] for i in order[pos:]]
        rem_b = [gb.labels[j] for j in range(nb) if j not in used_b]
        if cost + _label_lower_bound(rem_a, rem_b, model) >= best:
            return
        if pos == na:
            total = cost + completion_cost(used_b)
            if total < best:
                best = total
            return
        i = order[pos]

        def edge_delta(j: int | None) -> float:
            delta = 0.0
            for k, prior_j in assign.items():
                ma_out = out_a[i].get(k, 0)
                ma_in = in_a[i].get(k, 0)
                if j is None or prior_j is None:
                    mb_out = mb_in = 0
                else:
                    mb_out = gb.adj.get((j, prior_j), 0)
                    mb_in = gb.adj.get((prior_j, j), 0)
                delta += model.edge_delete * max(ma_out - mb_out, 0)
                delta += model.edge_insert * max(mb_out - ma_out, 0)
                delta += model.edge_delete * max(ma_in - mb_in, 0)
                delta += model.edge_insert * max(mb_in - ma_in, 0)
            return delta

        candidates: list[tuple[float, int | None]] = []
        for j in range(nb):
            if j in used_b:
                continue
            step = _node_cost(model, ga.labels[i], gb.labels[j]) + edge_delta(j)
            candidates.append((step, j))
        candidates.append((model.node_delete + edge_delta(None), None))
        candidates.sort(key=lambda item: (item[0], item[1] is None, item[1]))

        for step, j in candidates:
            if cost + step >= best:
                continue
            assign[i] = j
            if j is not None:
                used_b.add(j)
            recurse(pos + 1, assign, used_b, cost + step)
            if j is not None:
                used_b.discard(j)
            del assign[i]

    recurse(0, {}, set(), 0.0)
    return best


def ged(
    a: Plan,
    b: Plan,
    model: GedCostModel = DEFAULT_COST_MODEL,
    exact_limit: int = EXACT_NODE_LIMIT,
) -> GedResult:
    """Graph edit distance between two plans; symmetric by construction."""
    ga, gb = _graph_of(a), _graph_of(b)
    greedy = _mapping_cost(ga, gb, _greedy_assignment(ga, gb), model)
    if len(ga.labels) <= exact_limit and len(gb.labels) <= exact_limit:
        forward = _exact_ged(ga, gb, model, seed_bound=greedy + 1e-9)
        return GedResult(value=min(forward, greedy), exact=True)
    return GedResult(value=greedy, exact=False)


_TOKEN_CLEAN_RE = re.compile(r"[^a-z0-9_\s]+")


def task_tokens(text: str) -> frozenset[str]:
    return frozenset(_TOKEN_CLEAN_RE.sub(" ", text.lower()).split())


def token_set_cosine(a: str, b: str) -> float:
    ta, tb = task_tokens(a), task_tokens(b)
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    return len(ta & tb) / math.sqrt(len(ta) * len(tb))


@dataclass(frozen=True)
class NodeMatching:
    pairs: tuple[tuple[int, int, float, str], ...]
    unmatched_a: tuple[int, ...]
    unmatched_b: tuple[int, ...]


SimilarityHook = Callable[[str, str], float]


def match_nodes(
    a: Plan, b: Plan, similarity: SimilarityHook = token_set_cosine
) -> NodeMatching:
    """Match shared ids first, then greedily by task text similarity."""
    pairs: list[tuple[int, int, float, str]] = []
    shared = sorted(set(a.nodes) & set(b.nodes))
    for i in shared:
        pairs.append((i, i, similarity(a.nodes[i].task, b.nodes[i].task), "by_id"))
    rest_a = sorted(set(a.nodes) - set(shared))
    rest_b = sorted(set(b.nodes) - set(shared))
    scored = sorted(
        (
            (similarity(a.nodes[i].task, b.nodes[j].task), i, j)
            for i in rest_a
            for j in rest_b
        ),
        key=lambda item: (-item[0], item[1], item[2]),
    )
    taken_a: set[int] = set()
    taken_b: set[int] = set()
    for sim, i, j in scored:
        if i in taken_a or j in taken_b:
            continue
        taken_a.add(i)
        taken_b.add(j)
        pairs.append((i, j, sim, "by_similarity"))
    return NodeMatching(
        pairs=tuple(pairs),
        unmatched_a=tuple(i for i in rest_a if i not in taken_a),
        unmatched_b=tuple(j for j in rest_b if j not in taken_b),
    )


def semantic_similarity(
    a: Plan, b: Plan, similarity: SimilarityHook = token_set_cosine
) -> float:
    """Mean matched-pair task similarity; unmatched nodes contribute zero."""
    if not a.nodes and not b.nodes:
        return 1.0
    denom = max(len(a.nodes), len(b.nodes))
    if denom == 0:
        return 1.0
    matching = match_nodes(a, b, similarity)
    return sum(p[2] for p in matching.pairs) / denom


def stability(
    before: Plan, after: Plan, target: SubgraphSelection | frozenset[int]
) -> float:
    """Fraction of non-target nodes carried over byte-identically."""
    target_ids = target.node_ids if isinstance(target, SubgraphSelection) else target
    rest = [n for i, n in before.nodes.items() if i not in target_ids]
    if not rest:
        return 1.0
    kept = sum(
        1
        for n in rest
        if after.has_node(n.id) and node_data_equal(n, after.nodes[n.id])
    )
    return kept / len(rest)


def _numeric(value: Any) -> float | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return None
    return None


def value_equal(got: Any, want: Any, rel_tol: float = 1e-6) -> bool:
    if got is None:
        return False
    ng, nw = _numeric(got), _numeric(want)
    if ng is not None and nw is not None:
        return math.isclose(ng, nw, rel_tol=rel_tol, abs_tol=1e-9)
    sg = " ".join(str(got).casefold().split()).rstrip(" .")
    sw = " ".join(str(want).casefold().split()).rstrip(" .")
    return sg == sw


def execution_accuracy(pairs: Iterable[tuple[Any, Any]]) -> float:
    """Share of (result, truth) pairs that match; failed runs count wrong."""
    total = 0
    correct = 0
    for got, want in pairs:
        total += 1
        if value_equal(got, want):
            correct += 1
    if total == 0:
        raise ValueError("execution_accuracy needs at least one pair")
    return correct / total


@dataclass(frozen=True)
class MetricReport:
    """Per-run quality scores; quality fields are None when not integrated."""

    ged: float | None
    similarity: float | None
    stability: float | None
    integrated: bool
    exec_correct: bool | None = None
    exact_ged: bool = True

    def to_row(self) -> dict[str, Any]:
        return {
            "ged": self.ged,
            "similarity": self.similarity,
            "stability": self.stability,
            "integrated": self.integrated,
            "exec_correct": self.exec_correct,
            "exact_ged": self.exact_ged,
        }


@dataclass(frozen=True)
class AggregateRow:
    condition: str
    op_kind: str
    runs: int
    integrated: int
    failed: int
    success_rate: float
    mean_ged: float | None
    mean_similarity: float | None
    mean_stability: float | None
    accuracy: float | None


def aggregate(rows: Iterable[Mapping[str, Any]]) -> list[AggregateRow]:
    """Group run records by (condition, op_kind).

    Quality metrics (GED, similarity, stability) average over integrated runs
    only; accuracy averages over runs that recorded a correctness flag.
    """
    groups: dict[tuple[str, str], list[Mapping[str, Any]]] = {}
    for row in rows:
        key = (str(row["condition"]), str(row["op_kind"]))
        groups.setdefault(key, []).append(row)

    out: list[AggregateRow] = []
    for (condition, op_kind), items in sorted(groups.items()):
        runs = len(items)
        ok = [r for r in items if r.get("integrated")]
        integrated = len(ok)

        def mean_of(key: str) -> float | None:
            values = [float(r[key]) for r in ok if r.get(key) is not None]
            return sum(values) / len(values) if values else None

        scored = [r for r in items if r.get("exec_correct") is not None]
        accuracy = (
            sum(1 for r in scored if r["exec_correct"]) / len(scored)
            if scored
            else None
        )
        out.append(
            AggregateRow(
                condition=condition,
                op_kind=op_kind,
                runs=runs,
                integrated=integrated,
                failed=runs - integrated,
                success_rate=integrated / runs if runs else 0.0,
                mean_ged=mean_of("ged"),
                mean_similarity=mean_of("similarity"),
                mean_stability=mean_of("stability"),
                accuracy=accuracy,
            )
        )
    return out


_COLUMNS = (
    "condition",
    "op_kind",
    "runs",
    "integrated",
    "failed",
    "success_rate",
    "mean_ged",
    "mean_similarity",
    "mean_stability",
    "accuracy",
)


def _cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.3f}"
    return str(value)


def rows_to_csv(rows: Iterable[AggregateRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(_COLUMNS)
    for row in rows:
        writer.writerow([_cell(getattr(row, c)) for c in _COLUMNS])
    return buffer.getvalue()


def rows_to_markdown(rows: Iterable[AggregateRow]) -> str:
    table = [list(_COLUMNS)] + [
        [_cell(getattr(row, c)) for c in _COLUMNS] for row in rows
    ]
    widths = [max(len(line[k]) for line in table) for k in range(len(_COLUMNS))]
    lines = []
    for idx, line in enumerate(table):
        lines.append(
            "| " + " | ".join(cell.ljust(widths[k]) for k, cell in enumerate(line)) + " |"
        )
        if idx == 0:
            lines.append("|" + "|".join("-" * (w + 2) for w in widths) + "|")
    return "\n".join(lines) + "\n"
