import pytest

from predscore.actions import SquareId
from predscore.board import BoardConfig
from predscore.dataset import ParticipantModel, generate_synthetic_experiment
from predscore.errors import ValidationError
from predscore.metrics import score_dataset
from predscore.oracle import AgentSpec
from predscore.report import (
    build_metrics_table,
    five_number_summary,
    grade_distribution,
    participant_loss_sums,
    render_boxplot_svg,
    render_metrics_csv,
    render_metrics_markdown,
    render_vote_matrix_csv,
    render_vote_svg,
    vote_matrix,
)


@pytest.fixture(scope="module")
def bundle():
    return generate_synthetic_experiment(
        config=BoardConfig(9, 4, 4),
        agents=[AgentSpec(oracle="sampled", rollouts=24, seed=17)],
        participants=24,
        treatments=["NONE", "OTB", "BTW", "STT"],
        behavior=ParticipantModel(rank_probs=(0.4, 0.2, 0.1, 0.1, 0.1, 0.1)),
        seed=99,
        decisions_per_agent=4,
    )


class TestMetricsTable:
    def test_column_layout(self, bundle):
        table = build_metrics_table(bundle)
        assert len(table.rows) == 4
        # 5 LV columns, 5 LR columns, 4 overlap columns
        assert len(table.columns) == 5 + 5 + 4
        assert table.columns[0] == "mean_lv_all"
        assert table.columns[-1] == "mrbo_P4"

    def test_cells_recomputable_from_library(self, bundle):
        table = build_metrics_table(bundle)
        samples = score_dataset(list(bundle.predictions), bundle.values_by_decision())
        for treatment, cells in table.rows:
            mine = [s.lv for s in samples if s.treatment == treatment]
            assert cells[0] == pytest.approx(sum(mine) / len(mine), abs=1e-12)

    def test_best_markers_cover_every_column(self, bundle):
        table = build_metrics_table(bundle)
        marked = set()
        for best in table.best_in_column():
            marked.update(best)
        assert marked == set(table.columns)

    def test_csv_and_markdown_render(self, bundle):
        table = build_metrics_table(bundle)
        csv_text = render_metrics_csv(table)
        assert csv_text.startswith("treatment,mean_lv_all")
        assert len(csv_text.strip().splitlines()) == 1 + len(table.rows)
        md = render_metrics_markdown(table)
        assert md.count("|") > 10
        assert "**" in md  # best cells are bolded


class TestEightTreatmentLayout:
    def test_eight_rows_fourteen_columns(self):
        bundle = generate_synthetic_experiment(
            config=BoardConfig(9, 4, 4),
            agents=[AgentSpec(oracle="sampled", rollouts=8, seed=5)],
            participants=32,
            treatments=["NONE", "STT", "OTB", "BTW", "STT+OTB", "OTB+BTW", "STT+BTW", "ALL"],
            behavior=ParticipantModel(rank_probs=(0.5, 0.3, 0.2)),
            seed=5,
            decisions_per_agent=4,
        )
        table = build_metrics_table(bundle)
        assert len(table.rows) == 8
        assert len(table.columns) == 14


class TestGradeDistribution:
    def test_counts_conserve_samples(self, bundle):
        distribution = grade_distribution(bundle)
        total = sum(
            count
            for per_treatment in distribution.values()
            for counts in per_treatment.values()
            for count in counts.values()
        )
        assert total == len(bundle.predictions)


class TestLossSums:
    def test_group_sizes(self, bundle):
        groups = participant_loss_sums(bundle, "value")
        assert [g.label for g in groups] == ["BTW", "NONE", "OTB", "STT"]
        assert all(len(g.values) == 6 for g in groups)

    def test_rank_space_sums_are_integers(self, bundle):
        for g in participant_loss_sums(bundle, "rank"):
            assert all(v == int(v) for v in g.values)

    def test_bad_space_rejected(self, bundle):
        with pytest.raises(ValidationError):
            participant_loss_sums(bundle, "time")


class TestFiveNumber:
    def test_known_quartiles(self):
        assert five_number_summary([1, 2, 3, 4, 5]) == (1.0, 2.0, 3.0, 4.0, 5.0)

    def test_single_value(self):
        assert five_number_summary([2.5]) == (2.5, 2.5, 2.5, 2.5, 2.5)


class TestVotes:
    def test_matrix_conserves_votes(self, bundle):
        grid = vote_matrix(bundle, "P1")
        total = sum(v for row in grid for v in row)
        assert total == sum(1 for r in bundle.predictions if r.decision_id == "P1")

    def test_matrix_shape(self, bundle):
        grid = vote_matrix(bundle, "P1")
        assert len(grid) == 4
        assert all(len(row) == 9 for row in grid)

    def test_treatment_matrices_partition_pooled(self, bundle):
        pooled = vote_matrix(bundle, "P1")
        per = [vote_matrix(bundle, "P1", t) for t in bundle.treatments]
        for r in range(4):
            for c in range(9):
                assert pooled[r][c] == sum(grid[r][c] for grid in per)

    def test_single_square_votes(self, bundle):
        grid = vote_matrix(bundle, "P1", "NONE")
        csv_text = render_vote_matrix_csv(grid, 9)
        lines = csv_text.strip().splitlines()
        assert lines[0] == "row,A,B,C,D,E,F,G,H,I"
        assert len(lines) == 5

    def test_unknown_decision_rejected(self, bundle):
        with pytest.raises(ValidationError):
            vote_matrix(bundle, "P9")


class TestScoreTensorShape:
    def test_four_decision_9x4_tensor(self, bundle):
        from predscore.oracle import export_score_tensor

        tensor = export_score_tensor(list(bundle.decisions), BoardConfig(9, 4, 4))
        assert len(tensor["actions"]) == 36
        assert len(tensor["decisions"]) == 4
        for i, decision in enumerate(tensor["decisions"]):
            assert len(decision["values"]) == 36
            assert len(decision["sorted_series"]) == 36 - 2 * i


class TestSvg:
    def test_vote_svg_is_deterministic_and_annotated(self, bundle):
        grid = vote_matrix(bundle, "P1")
        chosen = SquareId.parse(bundle.decisions[0].chosen)
        a = render_vote_svg(grid, chosen)
        b = render_vote_svg(grid, chosen)
        assert a == b
        assert a.startswith("<svg")
        assert "#d62728" in a  # chosen-square outline

    def test_boxplot_svg_renders(self, bundle):
        svg = render_boxplot_svg(participant_loss_sums(bundle, "value"))
        assert svg.startswith("<svg")
        assert svg.count("<rect") == 4
