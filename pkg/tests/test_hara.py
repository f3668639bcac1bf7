import itertools
import json
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from depotsim.hara import (
    Asil,
    GuideWord,
    SecClass,
    assess_all,
    assess_goal,
    derive_hazards,
    determine_asil,
    load_goal_defs,
    load_hazard_rules,
    load_requirements,
    load_sec_table,
    render_report,
)

GOLDEN = Path(__file__).parent / "golden" / "hara_report.md"

# The full ISO 26262-3 determination table (Table 4), S1..S3 x E1..E4 x C1..C3,
# transcribed from the standard as the independent oracle.
ISO_MATRIX = {
    ("S1", "E1"): ("QM", "QM", "QM"),
    ("S1", "E2"): ("QM", "QM", "QM"),
    ("S1", "E3"): ("QM", "QM", "A"),
    ("S1", "E4"): ("QM", "A", "B"),
    ("S2", "E1"): ("QM", "QM", "QM"),
    ("S2", "E2"): ("QM", "QM", "A"),
    ("S2", "E3"): ("QM", "A", "B"),
    ("S2", "E4"): ("A", "B", "C"),
    ("S3", "E1"): ("QM", "QM", "A"),
    ("S3", "E2"): ("QM", "A", "B"),
    ("S3", "E3"): ("A", "B", "C"),
    ("S3", "E4"): ("B", "C", "D"),
}


class TestDetermineAsil:
    def test_minimal_risk_corner(self):
        assert determine_asil(SecClass.parse(("S1", "E1", "C1"))) == Asil.QM

    def test_maximum_risk_corner(self):
        assert determine_asil(SecClass.parse(("S3", "E4", "C3"))) == Asil.D

    def test_sg3_cell(self):
        assert determine_asil(SecClass.parse(("S3", "E4", "C2"))) == Asil.C

    def test_full_iso_matrix_oracle(self):
        """The additive rule must match all 36 nonzero cells of the published table."""
        for (s, e), row in ISO_MATRIX.items():
            for ci, expected in enumerate(row, start=1):
                got = determine_asil(SecClass.parse((s, e, f"C{ci}")))
                assert got.name == expected, (s, e, f"C{ci}")

    def test_zero_class_forces_qm_exhaustive(self):
        for s, e, c in itertools.product(range(4), range(5), range(4)):
            if s == 0 or e == 0 or c == 0:
                assert determine_asil(SecClass(s, e, c)) == Asil.QM

    def test_monotone_in_each_class_exhaustive(self):
        for s, e, c in itertools.product(range(1, 4), range(1, 5), range(1, 4)):
            base = determine_asil(SecClass(s, e, c))
            if s < 3:
                assert determine_asil(SecClass(s + 1, e, c)) >= base
            if e < 4:
                assert determine_asil(SecClass(s, e + 1, c)) >= base
            if c < 3:
                assert determine_asil(SecClass(s, e, c + 1)) >= base

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            SecClass(4, 1, 1)


class TestDeriveHazards:
    def test_bundled_catalog_reproduces_table(self):
        events = derive_hazards(load_requirements(), load_hazard_rules())
        assert [e.id for e in events] == [f"H{i}" for i in range(1, 9)]
        by_id = {e.id: e for e in events}
        assert by_id["H1"].cause == "Loss of vehicle AODCA"
        assert by_id["H2"].cause == "Loss of vehicle braking"
        assert by_id["H3"].cause == "Unintended acceleration"
        assert by_id["H4"].cause == "Loss of V2I communication. No trajectory update"
        assert by_id["H5"].cause == "Intermittent V2I communication. Delayed trajectory update"
        assert by_id["H6"].cause == "Loss of IX sensing. Infrastructure blind to obstacles"
        assert by_id["H7"].cause == "Faulty IX prediction. Incorrect trajectory update"
        assert by_id["H8"].cause == "Emergency stop unavailable. No intervention on critical fault"
        assert all(e.event == "Collision with pedestrian" for e in events)
        # guide-word attribution
        words = {e.id: e.guide_word for e in events}
        assert words["H1"] == GuideWord.LOSS_OF_FUNCTION
        assert words["H2"] == GuideWord.LOSS_OF_FUNCTION
        assert words["H3"] == GuideWord.MORE_THAN_INTENDED
        assert words["H4"] == GuideWord.LOSS_OF_FUNCTION
        assert words["H5"] == GuideWord.INTERMITTENT
        assert words["H6"] == GuideWord.LOSS_OF_FUNCTION
        assert words["H7"] == GuideWord.MORE_THAN_INTENDED
        assert words["H8"] == GuideWord.LOSS_OF_FUNCTION

    def test_empty_catalog_empty_result(self):
        assert derive_hazards([], load_hazard_rules()) == []

    def test_single_braking_requirement_yields_h2(self):
        reqs = [r for r in load_requirements() if r.id == "VEH-BRAKE"]
        events = derive_hazards(reqs, load_hazard_rules())
        assert len(events) == 1
        assert events[0].id == "H2" and events[0].cause == "Loss of vehicle braking"

    def test_unknown_guide_word_rejected(self):
        bad = json.dumps(
            {"requirements": [
                {"id": "X", "subsystem": "Vehicle", "text": "t", "guide_words": ["Sideways"]}
            ]}
        )
        with pytest.raises(ValueError, match="Sideways"):
            load_requirements(bad)


class TestAssessGoals:
    def test_sg3_row(self):
        per, worst = assess_goal("SG3", load_sec_table())
        assert per == {"NS/C": Asil.A, "HS/C": Asil.A, "HS/UC": Asil.C}
        assert worst == Asil.C

    def test_sg1_row(self):
        per, worst = assess_goal("SG1", load_sec_table())
        assert per == {"NS/C": Asil.QM, "HS/C": Asil.QM, "HS/UC": Asil.B}
        assert worst == Asil.B

    def test_all_s0_cells_qm(self):
        table = {"SG1": {s: SecClass(0, 4, 3) for s in ("NS/C", "HS/C", "HS/UC")}}
        per, worst = assess_goal("SG1", table)
        assert set(per.values()) == {Asil.QM} and worst == Asil.QM

    def test_missing_scenario_cell(self):
        with pytest.raises(KeyError, match="HS/UC"):
            assess_goal("SG1", {"SG1": {"NS/C": SecClass(1, 1, 1), "HS/C": SecClass(1, 1, 1)}})

    def test_full_table_matches_published_ratings(self):
        goals = assess_all(load_goal_defs(), load_sec_table())
        expected = {
            "SG1": ("QM", "QM", "B", "B", "Vehicle"),
            "SG2": ("QM", "QM", "B", "B", "Vehicle"),
            "SG3": ("A", "A", "C", "C", "Vehicle"),
            "SG4": ("QM", "QM", "A", "A", "IX / Vehicle"),
            "SG5": ("QM", "A", "C", "C", "IX"),
            "SG6": ("QM", "A", "C", "C", "IX"),
        }
        for g in goals:
            nsc, hsc, hsuc, worst, alloc = expected[g.id]
            assert g.per_scenario["NS/C"].name == nsc
            assert g.per_scenario["HS/C"].name == hsc
            assert g.per_scenario["HS/UC"].name == hsuc
            assert g.worst_case.name == worst
            assert g.allocation_label() == alloc

    @given(
        st.dictionaries(
            st.sampled_from(("NS/C", "HS/C", "HS/UC")),
            st.tuples(st.integers(0, 3), st.integers(0, 4), st.integers(0, 3)),
            min_size=3,
        )
    )
    def test_worst_case_is_max_over_scenarios(self, cells):
        table = {"SGX": {k: SecClass(*v) for k, v in cells.items()}}
        per, worst = assess_goal("SGX", table)
        assert worst == max(per.values())


class TestRenderReport:
    def make(self):
        hazards = derive_hazards(load_requirements(), load_hazard_rules())
        goals = assess_all(load_goal_defs(), load_sec_table())
        return hazards, goals

    def test_markdown_matches_golden(self):
        hazards, goals = self.make()
        doc = render_report(hazards, goals, "markdown")
        assert doc == GOLDEN.read_text(encoding="utf-8")

    def test_markdown_structure(self):
        hazards, goals = self.make()
        doc = render_report(hazards, goals, "markdown")
        hazard_rows = [l for l in doc.splitlines() if l.startswith("| H")]
        goal_rows = [l for l in doc.splitlines() if l.startswith("| SG")]
        assert len(hazard_rows) == 8
        assert len(goal_rows) == 6

    def test_csv_columns(self):
        hazards, goals = self.make()
        doc = render_report(hazards, goals, "csv")
        lines = doc.strip().splitlines()
        assert lines[0] == "id,NS/C,HS/C,HS/UC,worst,allocation"
        assert len(lines) == 7
        assert lines[3].startswith("SG3,A,A,C,C,")

    def test_json_machine_readable(self):
        hazards, goals = self.make()
        doc = json.loads(render_report(hazards, goals, "json"))
        assert len(doc["hazards"]) == 8
        assert len(doc["goals"]) == 6
        assert doc["goals"][2]["asil"] == {"NS/C": "A", "HS/C": "A", "HS/UC": "C"}

    def test_byte_stable(self):
        hazards, goals = self.make()
        for fmt in ("markdown", "csv", "json"):
            assert render_report(hazards, goals, fmt) == render_report(hazards, goals, fmt)

    def test_unknown_format(self):
        hazards, goals = self.make()
        with pytest.raises(ValueError, match="format"):
            render_report(hazards, goals, "xml")
