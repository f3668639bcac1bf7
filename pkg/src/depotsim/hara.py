"""ISO 26262-3 concept-phase engine.

Guide-word examination of the functional-requirement catalog derives the
hazardous events; severity/exposure/controllability classes map to an ASIL
through the standard's determination matrix (implemented as the equivalent
additive closure and validated against the full published table in the test
suite); per-scenario ASILs roll up to worst-case safety-goal ratings with
subsystem allocation. All catalogs are data files, editable without code
changes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from enum import Enum, IntEnum
from importlib import resources
from typing import Optional

SEC_SCENARIOS = ("NS/C", "HS/C", "HS/UC")


class GuideWord(str, Enum):
    LOSS_OF_FUNCTION = "LossOfFunction"
    MORE_THAN_INTENDED = "MoreThanIntended"
    LESS_THAN_INTENDED = "LessThanIntended"
    INTERMITTENT = "Intermittent"


class Asil(IntEnum):
    QM = 0
    A = 1
    B = 2
    C = 3
    D = 4


@dataclass(frozen=True)
class SecClass:
    s: int
    e: int
    c: int

    def __post_init__(self):
        if not (0 <= self.s <= 3 and 0 <= self.e <= 4 and 0 <= self.c <= 3):
            raise ValueError("class out of range (S0..S3, E0..E4, C0..C3)")

    @classmethod
    def parse(cls, triple) -> "SecClass":
        s, e, c = triple
        return cls(int(str(s)[1:]), int(str(e)[1:]), int(str(c)[1:]))

    def labels(self) -> tuple[str, str, str]:
        return (f"S{self.s}", f"E{self.e}", f"C{self.c}")


def determine_asil(sec: SecClass) -> Asil:
    """ASIL per the determination matrix: any zero class is QM; otherwise the
    class sum n maps 10->D, 9->C, 8->B, 7->A, <=6->QM (equivalent to the
    published 36-cell table, see the oracle test)."""
    if sec.s == 0 or sec.e == 0 or sec.c == 0:
        return Asil.QM
    n = sec.s + sec.e + sec.c
    if n >= 10:
        return Asil.D
    if n == 9:
        return Asil.C
    if n == 8:
        return Asil.B
    if n == 7:
        return Asil.A
    return Asil.QM


@dataclass(frozen=True)
class FunctionalRequirement:
    id: str
    subsystem: str  # Vehicle | IX | HMI
    text: str
    guide_words: tuple[GuideWord, ...]


@dataclass(frozen=True)
class HazardousEvent:
    id: str
    source_requirement: str
    guide_word: GuideWord
    cause: str
    event: str


@dataclass(frozen=True)
class SafetyGoal:
    id: str
    text: str
    allocation: str  # Vehicle | IX | Joint
    per_scenario: dict[str, Asil]
    worst_case: Asil

    def allocation_label(self) -> str:
        return {"Vehicle": "Vehicle", "IX": "IX", "Joint": "IX / Vehicle"}[self.allocation]


# -- catalogs -----------------------------------------------------------------


def _data_text(name: str) -> str:
    return resources.files("depotsim.data").joinpath(name).read_text(encoding="utf-8")


def load_requirements(text: Optional[str] = None) -> list[FunctionalRequirement]:
    doc = json.loads(text if text is not None else _data_text("requirements.json"))
    out = []
    seen = set()
    for item in doc["requirements"]:
        rid = item["id"]
        if rid in seen:
            raise ValueError(f"duplicate requirement id {rid!r}")
        seen.add(rid)
        words = []
        for w in item["guide_words"]:
            try:
                words.append(GuideWord(w))
            except ValueError:
                raise ValueError(f"requirement {rid!r} references unknown guide word {w!r}")
        out.append(FunctionalRequirement(rid, item["subsystem"], item["text"], tuple(words)))
    return out


def load_hazard_rules(text: Optional[str] = None) -> dict[tuple[str, GuideWord], dict]:
    doc = json.loads(text if text is not None else _data_text("hazards.json"))
    rules = {}
    for item in doc["hazards"]:
        key = (item["requirement"], GuideWord(item["guide_word"]))
        rules[key] = item
    return rules


def load_goal_defs(text: Optional[str] = None) -> list[dict]:
    return json.loads(text if text is not None else _data_text("goals.json"))["goals"]


def load_sec_table(text: Optional[str] = None) -> dict[str, dict[str, SecClass]]:
    doc = json.loads(text if text is not None else _data_text("sec_table.json"))
    return {
        goal: {scn: SecClass.parse(sec) for scn, sec in cells.items()}
        for goal, cells in doc.items()
    }


def default_sec_table_doc() -> dict:
    return json.loads(_data_text("sec_table.json"))


# -- operations ---------------------------------------------------------------


def derive_hazards(requirements: list[FunctionalRequirement],
                   rules: dict[tuple[str, GuideWord], dict]) -> list[HazardousEvent]:
    """Cross each requirement with its applicable guide words and keep the
    curated pairs; the bundled catalog yields exactly the eight events."""
    events = []
    for req in requirements:
        for word in req.guide_words:
            rule = rules.get((req.id, word))
            if rule is None:
                continue
            events.append(
                HazardousEvent(rule["id"], req.id, word, rule["cause"], rule["event"])
            )
    events.sort(key=lambda e: e.id)
    return events


def assess_goal(goal_id: str, sec_table: dict[str, dict[str, SecClass]]) -> tuple[dict[str, Asil], Asil]:
    cells = sec_table.get(goal_id)
    if cells is None:
        raise KeyError(f"no S/E/C cells for goal {goal_id!r}")
    per_scenario = {}
    for scn in SEC_SCENARIOS:
        if scn not in cells:
            raise KeyError(f"goal {goal_id!r} is missing scenario cell {scn!r}")
        per_scenario[scn] = determine_asil(cells[scn])
    worst = max(per_scenario.values())
    return per_scenario, worst


def assess_all(goal_defs: list[dict], sec_table: dict[str, dict[str, SecClass]]) -> list[SafetyGoal]:
    goals = []
    for gd in goal_defs:
        per_scenario, worst = assess_goal(gd["id"], sec_table)
        goals.append(SafetyGoal(gd["id"], gd["text"], gd["allocation"], per_scenario, worst))
    return goals


def render_report(hazards: list[HazardousEvent], goals: list[SafetyGoal], fmt: str = "markdown") -> str:
    if fmt == "markdown":
        return _render_markdown(hazards, goals)
    if fmt == "csv":
        return _render_csv(goals)
    if fmt == "json":
        return _render_json(hazards, goals)
    raise ValueError(f"unknown report format {fmt!r}")


def _render_markdown(hazards: list[HazardousEvent], goals: list[SafetyGoal]) -> str:
    lines = [
        "# Hazard Analysis and Risk Assessment",
        "",
        "## Identified Hazards",
        "",
        "| ID | Cause | Hazardous Event |",
        "| --- | --- | --- |",
    ]
    for h in hazards:
        lines.append(f"| {h.id} | {h.cause} | {h.event} |")
    lines += [
        "",
        "## Safety Goals and ASIL Ratings",
        "",
        "| Goal | Description | NS/C | HS/C | HS/UC | Worst | Assigned To |",
        "| --- | --- | --- | --- | --- | --- | --- |",
    ]
    for g in goals:
        cells = " | ".join(g.per_scenario[s].name for s in SEC_SCENARIOS)
        lines.append(
            f"| {g.id} | {g.text} | {cells} | {g.worst_case.name} | {g.allocation_label()} |"
        )
    lines.append("")
    return "\n".join(lines)


def _render_csv(goals: list[SafetyGoal]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "NS/C", "HS/C", "HS/UC", "worst", "allocation"])
    for g in goals:
        writer.writerow(
            [g.id]
            + [g.per_scenario[s].name for s in SEC_SCENARIOS]
            + [g.worst_case.name, g.allocation_label()]
        )
    return buf.getvalue()


def _render_json(hazards: list[HazardousEvent], goals: list[SafetyGoal]) -> str:
    doc = {
        "hazards": [
            {
                "id": h.id,
                "requirement": h.source_requirement,
                "guide_word": h.guide_word.value,
                "cause": h.cause,
                "event": h.event,
            }
            for h in hazards
        ],
        "goals": [
            {
                "id": g.id,
                "text": g.text,
                "asil": {s: g.per_scenario[s].name for s in SEC_SCENARIOS},
                "worst": g.worst_case.name,
                "allocation": g.allocation_label(),
            }
            for g in goals
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def bundled_report(fmt: str = "markdown") -> str:
    hazards = derive_hazards(load_requirements(), load_hazard_rules())
    goals = assess_all(load_goal_defs(), load_sec_table())
    return render_report(hazards, goals, fmt)
