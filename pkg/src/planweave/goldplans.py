"""Hand-authored gold plans for the benchmark generator.

Four families mirror the question shapes the benchmark covers: stepwise
arithmetic, multi-hop lookup chains, list-then-aggregate retrieval, and
top-k retrieval. Every plan is executable with the built-in executors: math
nodes carry expression markers, other nodes resolve against the fixture
tables attached to each gold plan. Authoring rules the generator and the
feedback parser rely on:

- node ids are contiguous from 1 and the sink has the highest id;
- every edge carries the same variable name on both endpoints;
- each output variable is produced by exactly one node;
- task text is a single line without double quotes or periods and mentions
  every input and output variable of its node;
- non-math tasks embed their variant's distinguishing constant so fixture
  keys never collide across gold plans.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .model import AgentKind, Plan, PlanEdge, PlanNode, VarBinding, make_plan
from .serialize import ParseError, parse_plan, serialize_plan


class Subset(str, Enum):
    STEPWISE_MATH = "stepwise_math"
    MULTI_HOP = "multi_hop"
    LISTED_RETRIEVAL = "listed_retrieval"
    TOPK_RETRIEVAL = "topk_retrieval"


@dataclass(frozen=True)
class GoldPlan:
    name: str
    subset: Subset
    question: str
    answer: str | None
    plan: Plan
    fixtures: Mapping[str, Mapping[str, str]]


@dataclass(frozen=True)
class GoldPlanSet:
    plans: tuple[GoldPlan, ...]

    def by_subset(self, subset: Subset) -> tuple[GoldPlan, ...]:
        return tuple(g for g in self.plans if g.subset is subset)

    def get(self, name: str) -> GoldPlan:
        for g in self.plans:
            if g.name == name:
                return g
        raise KeyError(name)

    def fixtures(self) -> dict[str, Mapping[str, str]]:
        merged: dict[str, Mapping[str, str]] = {}
        for g in self.plans:
            merged.update(g.fixtures)
        return merged


def _node(
    node_id: int,
    task: str,
    agent: AgentKind,
    inputs: Iterable[tuple[str, str] | str] = (),
    outputs: Iterable[str] = (),
) -> PlanNode:
    bindings = tuple(
        VarBinding(i, "") if isinstance(i, str) else VarBinding(i[0], i[1])
        for i in inputs
    )
    return PlanNode(
        id=node_id, task=task, agent=agent, inputs=bindings, outputs=tuple(outputs)
    )


def _edge(src: int, dest: int, var: str) -> PlanEdge:
    return PlanEdge(src_node=src, dest_node=dest, src_output=var, dest_input=var)


def _flip_gold(
    tag: int, base: int, repair: int, markup: str, keep: str, answer: str
) -> GoldPlan:
    m = AgentKind.MATH
    plan = make_plan(
        [
            _node(
                1,
                "Record the base purchase price base_price as house_price"
                " {{expr house_price: base_price}}",
                m,
                [("base_price", str(base))],
                ["house_price"],
            ),
            _node(
                2,
                "Record the renovation budget repair_budget as repair_cost"
                " {{expr repair_cost: repair_budget}}",
                m,
                [("repair_budget", str(repair))],
                ["repair_cost"],
            ),
            _node(
                3,
                "Compute total_cost as house_price plus repair_cost"
                " {{expr total_cost: house_price + repair_cost}}",
                m,
                ["house_price", "repair_cost"],
                ["total_cost"],
            ),
            _node(
                4,
                "Compute sale_price as total_cost plus house_price times markup_rate"
                " {{expr sale_price: total_cost + house_price * markup_rate}}",
                m,
                ["total_cost", "house_price", ("markup_rate", markup)],
                ["sale_price"],
            ),
            _node(
                5,
                "Compute profit as sale_price minus house_price, all times keep_rate"
                " {{expr profit: (sale_price - house_price) * keep_rate}}",
                m,
                ["sale_price", "house_price", ("keep_rate", keep)],
                ["profit"],
            ),
        ],
        [
            _edge(1, 3, "house_price"),
            _edge(2, 3, "repair_cost"),
            _edge(1, 4, "house_price"),
            _edge(3, 4, "total_cost"),
            _edge(4, 5, "sale_price"),
            _edge(1, 5, "house_price"),
        ],
    )
    question = (
        f"A house is bought for {base} dollars and renovated for {repair} dollars."
        f" It sells for the total cost plus a {markup} markup on the purchase"
        f" price, and {keep} of the gain over the purchase price is kept after"
        " fees. How much profit remains?"
    )
    return GoldPlan(
        name=f"math_flip_{tag}",
        subset=Subset.STEPWISE_MATH,
        question=question,
        answer=answer,
        plan=plan,
        fixtures={},
    )


def _pair_gold(
    tag: int, first: int, second: int, scale: int, answer: str
) -> GoldPlan:
    m = AgentKind.MATH
    plan = make_plan(
        [
            _node(
                1,
                "Compute pair_sum as first_value plus second_value and pair_diff as"
                " first_value minus second_value"
                " {{expr pair_sum: first_value + second_value}}"
                " {{expr pair_diff: first_value - second_value}}",
                m,
                [("first_value", str(first)), ("second_value", str(second))],
                ["pair_sum", "pair_diff"],
            ),
            _node(
                2,
                "Compute double_sum as pair_sum times scale_factor"
                " {{expr double_sum: pair_sum * scale_factor}}",
                m,
                ["pair_sum", ("scale_factor", str(scale))],
                ["double_sum"],
            ),
            _node(
                3,
                "Compute square_diff as pair_diff times pair_diff"
                " {{expr square_diff: pair_diff * pair_diff}}",
                m,
                ["pair_diff"],
                ["square_diff"],
            ),
            _node(
                4,
                "Compute combo_value as double_sum plus square_diff"
                " {{expr combo_value: double_sum + square_diff}}",
                m,
                ["double_sum", "square_diff"],
                ["combo_value"],
            ),
            _node(
                5,
                "Compute final_value as combo_value minus pair_sum"
                " {{expr final_value: combo_value - pair_sum}}",
                m,
                ["combo_value", "pair_sum"],
                ["final_value"],
            ),
        ],
        [
            _edge(1, 2, "pair_sum"),
            _edge(1, 3, "pair_diff"),
            _edge(2, 4, "double_sum"),
            _edge(3, 4, "square_diff"),
            _edge(4, 5, "combo_value"),
            _edge(1, 5, "pair_sum"),
        ],
    )
    question = (
        f"Two meters read {first} and {second}. Scale the sum of the readings by"
        f" {scale}, add the square of their difference, then subtract the plain"
        " sum. What value results?"
    )
    return GoldPlan(
        name=f"math_pair_{tag}",
        subset=Subset.STEPWISE_MATH,
        question=question,
        answer=answer,
        plan=plan,
        fixtures={},
    )


def _hop_gold(
    tag: int,
    year: int,
    name_a: str,
    name_b: str,
    city_a: str,
    city_b: str,
    distance: str,
    threshold: int,
    verdict: str,
) -> GoldPlan:
    s = AgentKind.SEARCH
    award_a = f"{year} Harborview Circuit Sixth Player Award"
    award_b = f"{year} Harborview Circuit Debut Player Award"
    t1 = f"Identify award_a_winner, the full name of the winner of the {award_a}"
    t2 = f"Find city_a, the birthplace of award_a_winner, the winner of the {award_a}"
    t3 = f"Identify award_b_winner, the full name of the winner of the {award_b}"
    t4 = f"Find city_b, the birthplace of award_b_winner, the winner of the {award_b}"
    t5 = (
        "Find distance_km, the distance in kilometers between city_a and city_b,"
        f" the birthplaces of the {award_a} and {award_b} winners"
    )
    t6 = (
        f"State whether distance_km is greater than {threshold} kilometers for the"
        f" {award_a} and {award_b} winner pair, answering yes or no"
    )
    plan = make_plan(
        [
            _node(1, t1, s, [], ["award_a_winner"]),
            _node(2, t2, s, ["award_a_winner"], ["city_a"]),
            _node(3, t3, s, [], ["award_b_winner"]),
            _node(4, t4, s, ["award_b_winner"], ["city_b"]),
            _node(5, t5, s, ["city_a", "city_b"], ["distance_km"]),
            _node(
                6,
                t6,
                AgentKind.COMMONSENSE,
                ["distance_km"],
                ["distance_verdict"],
            ),
        ],
        [
            _edge(1, 2, "award_a_winner"),
            _edge(3, 4, "award_b_winner"),
            _edge(2, 5, "city_a"),
            _edge(4, 5, "city_b"),
            _edge(5, 6, "distance_km"),
        ],
    )
    question = (
        f"Were the winners of the {award_a} and the {award_b} born more than"
        f" {threshold} kilometers apart?"
    )
    fixtures = {
        t1: {"award_a_winner": name_a},
        t2: {"city_a": city_a},
        t3: {"award_b_winner": name_b},
        t4: {"city_b": city_b},
        t5: {"distance_km": distance},
        t6: {"distance_verdict": verdict},
    }
    return GoldPlan(
        name=f"hop_awards_{tag}",
        subset=Subset.MULTI_HOP,
        question=question,
        answer=None,
        plan=plan,
        fixtures=fixtures,
    )


def _listed_gold(
    tag: int,
    series: str,
    books: str,
    count: int,
    max_pages: int,
    min_pages: int,
    verdict: str,
) -> GoldPlan:
    s = AgentKind.SEARCH
    m = AgentKind.MATH
    t1 = (
        f"Find book_list and book_count, the list of novels in the {series} and"
        " how many there are"
    )
    t2 = f"Find max_pages, the page count of the longest novel in book_list from the {series}"
    t3 = f"Find min_pages, the page count of the shortest novel in book_list from the {series}"
    t4 = (
        "Compute page_gap as max_pages minus min_pages"
        " {{expr page_gap: max_pages - min_pages}}"
    )
    t5 = (
        "Compute gap_per_book as page_gap divided by book_count"
        " {{expr gap_per_book: page_gap / book_count}}"
    )
    t6 = (
        f"State whether gap_per_book pages per novel is a wide spread for"
        f" book_list of the {series}, answering yes or no"
    )
    plan = make_plan(
        [
            _node(1, t1, s, [], ["book_list", "book_count"]),
            _node(2, t2, s, ["book_list"], ["max_pages"]),
            _node(3, t3, s, ["book_list"], ["min_pages"]),
            _node(4, t4, m, ["max_pages", "min_pages"], ["page_gap"]),
            _node(5, t5, m, ["page_gap", "book_count"], ["gap_per_book"]),
            _node(
                6,
                t6,
                AgentKind.COMMONSENSE,
                ["gap_per_book", "book_list"],
                ["spread_verdict"],
            ),
        ],
        [
            _edge(1, 2, "book_list"),
            _edge(1, 3, "book_list"),
            _edge(2, 4, "max_pages"),
            _edge(3, 4, "min_pages"),
            _edge(4, 5, "page_gap"),
            _edge(1, 5, "book_count"),
            _edge(5, 6, "gap_per_book"),
            _edge(1, 6, "book_list"),
        ],
    )
    question = (
        f"Across the novels of the {series}, how large is the page-count spread"
        " per book between the longest and shortest volumes, and is it wide?"
    )
    fixtures = {
        t1: {"book_list": books, "book_count": str(count)},
        t2: {"max_pages": str(max_pages)},
        t3: {"min_pages": str(min_pages)},
        t6: {"spread_verdict": verdict},
    }
    return GoldPlan(
        name=f"listed_books_{tag}",
        subset=Subset.LISTED_RETRIEVAL,
        question=question,
        answer=None,
        plan=plan,
        fixtures=fixtures,
    )


def _topk_gold(
    tag: int,
    region: str,
    year: int,
    schools: str,
    tuition_first: int,
    tuition_last: int,
) -> GoldPlan:
    s = AgentKind.SEARCH
    m = AgentKind.MATH
    t1 = (
        f"Find school_list and school_count, the five {region} design academies"
        f" ranked highest in the {year} Atlas survey"
    )
    t2 = (
        f"Find tuition_first, the annual tuition of the highest ranked academy in"
        f" school_list from the {year} Atlas survey"
    )
    t3 = (
        f"Find tuition_last, the annual tuition of the lowest ranked academy in"
        f" school_list from the {year} Atlas survey"
    )
    t4 = (
        "Compute tuition_gap as tuition_first minus tuition_last"
        " {{expr tuition_gap: tuition_first - tuition_last}}"
    )
    t5 = (
        "Compute gap_share as tuition_gap divided by school_count"
        " {{expr gap_share: tuition_gap / school_count}}"
    )
    t6 = (
        "Compute gap_points as gap_share times percent_scale"
        " {{expr gap_points: gap_share * percent_scale}}"
    )
    plan = make_plan(
        [
            _node(1, t1, s, [], ["school_list", "school_count"]),
            _node(2, t2, s, ["school_list"], ["tuition_first"]),
            _node(3, t3, s, ["school_list"], ["tuition_last"]),
            _node(4, t4, m, ["tuition_first", "tuition_last"], ["tuition_gap"]),
            _node(5, t5, m, ["tuition_gap", "school_count"], ["gap_share"]),
            _node(6, t6, m, ["gap_share", ("percent_scale", "100")], ["gap_points"]),
        ],
        [
            _edge(1, 2, "school_list"),
            _edge(1, 3, "school_list"),
            _edge(2, 4, "tuition_first"),
            _edge(3, 4, "tuition_last"),
            _edge(4, 5, "tuition_gap"),
            _edge(1, 5, "school_count"),
            _edge(5, 6, "gap_share"),
        ],
    )
    question = (
        f"Among the five {region} design academies ranked highest in the {year}"
        " Atlas survey, how many tuition points separate the top and bottom"
        " schools per ranked seat?"
    )
    fixtures = {
        t1: {"school_list": schools, "school_count": "5"},
        t2: {"tuition_first": str(tuition_first)},
        t3: {"tuition_last": str(tuition_last)},
    }
    return GoldPlan(
        name=f"topk_schools_{tag}",
        subset=Subset.TOPK_RETRIEVAL,
        question=question,
        answer=None,
        plan=plan,
        fixtures=fixtures,
    )


def gold_plan_set() -> GoldPlanSet:
    """All 25 gold plans; answers for the math subset are hand-computed."""
    plans = (
        # profit = (repair + base * markup) * keep
        _flip_gold(1, 200000, 50000, "0.2", "0.9", "81000"),
        _flip_gold(2, 150000, 30000, "0.1", "0.8", "36000"),
        _flip_gold(3, 300000, 75000, "0.25", "0.85", "127500"),
        _flip_gold(4, 120000, 40000, "0.5", "0.75", "75000"),
        _flip_gold(5, 250000, 60000, "0.3", "0.95", "128250"),
        # final = (first+second) * (scale-1) + (first-second)^2
        _pair_gold(1, 12, 8, 3, "56"),
        _pair_gold(2, 25, 15, 2, "140"),
        _pair_gold(3, 30, 10, 4, "520"),
        _pair_gold(4, 9, 4, 5, "77"),
        _pair_gold(5, 50, 30, 2, "480"),
        _hop_gold(1, 2015, "Dorian Vale", "Milo Reyes", "Crescent Bay", "Tallow Creek", "820", 500, "yes"),
        _hop_gold(2, 2016, "Anselm Brook", "Petra Quill", "Gullwing Point", "Ferrow Hollow", "412", 500, "no"),
        _hop_gold(3, 2017, "Casper Lowell", "Ines Marrow", "Bramblewick", "Saltmere", "645", 600, "yes"),
        _hop_gold(4, 2018, "Rowan Ashvale", "Tamsin Reed", "Copperfield Downs", "Lantern Quay", "230", 300, "no"),
        _hop_gold(5, 2019, "Felix Thornbury", "Oriel Hask", "Winnow Ridge", "Marrow Glen", "1120", 1000, "yes"),
        _listed_gold(1, "Emberfall Chronicles", "Cinder Oath; Ashen Crown; Pyre Watch; Smoke Vigil; Brand of Dawn; Kindled Court; Last Ember", 7, 712, 292, "yes"),
        _listed_gold(2, "Gravemarsh Saga", "Mire Song; Bog Iron; Reed Crown; Fen Light; Black Water", 5, 655, 305, "yes"),
        _listed_gold(3, "Silver Meridian novels", "First Needle; Pole Star; Quiet Axis; Drift Line; Turning Hour; True North", 6, 540, 300, "no"),
        _listed_gold(4, "Thornwick Histories", "Briar Gate; Hollow Crown; Winter Ledger; Spindle Court", 4, 498, 218, "yes"),
        _listed_gold(5, "Palefire Cycle", "White Wick; Cold Flame; Glass Lantern; Still Light; Morrow Blaze; Dim Hearth; Snow Taper; Last Glow", 8, 810, 330, "no"),
        _topk_gold(1, "Northshore", 2021, "Arden Atelier; Bellwether Hall; Corvid Institute; Dunmore Works; Eastgate Studio", 52000, 36000),
        _topk_gold(2, "Westmark", 2022, "Foxglove Academy; Gable House; Harrow Studio; Ivylund Hall; Juniper Forge", 48000, 30000),
        _topk_gold(3, "Eastvale", 2023, "Kestrel Hall; Larkspur Institute; Mossgate Studio; Nightfield Works; Osprey Atelier", 61000, 41000),
        _topk_gold(4, "Southbrook", 2024, "Pembry Hall; Quince Academy; Rushlight Studio; Seabright Works; Thistledown House", 39000, 24000),
        _topk_gold(5, "Midlake", 2025, "Umberline Institute; Violet Forge; Wrenfield Hall; Yarrow Studio; Zephyr Atelier", 57000, 32000),
    )
    return GoldPlanSet(plans=plans)


def export_gold_plans(golds: GoldPlanSet, directory: str | Path) -> list[Path]:
    """Write one plan document and one metadata document per gold plan."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for g in golds.plans:
        plan_path = root / f"{g.name}.plan.json"
        meta_path = root / f"{g.name}.meta.json"
        plan_path.write_text(serialize_plan(g.plan), encoding="utf-8")
        meta = {
            "name": g.name,
            "subset": g.subset.value,
            "question": g.question,
            "answer": g.answer,
            "fixtures": {k: dict(v) for k, v in g.fixtures.items()},
        }
        meta_path.write_text(
            json.dumps(meta, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
        written.extend([plan_path, meta_path])
    return written


def load_gold_plans(directory: str | Path) -> GoldPlanSet:
    """Read a directory produced by export_gold_plans."""
    root = Path(directory)
    plans: list[GoldPlan] = []
    for meta_path in sorted(root.glob("*.meta.json")):
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError("malformed-document", f"{meta_path.name}: {exc}") from exc
        name = meta["name"]
        plan_path = root / f"{name}.plan.json"
        plan = parse_plan(plan_path.read_text(encoding="utf-8"))
        plans.append(
            GoldPlan(
                name=name,
                subset=Subset(meta["subset"]),
                question=meta["question"],
                answer=meta.get("answer"),
                plan=plan,
                fixtures={k: dict(v) for k, v in meta.get("fixtures", {}).items()},
            )
        )
    return GoldPlanSet(plans=tuple(plans))
