import random

import pytest

from predscore.actions import QUADRANTS
from predscore.board import BoardConfig
from predscore.dataset import (
    FOUR_TOWERS_VALUE_RANGE,
    ActionManifest,
    ExperimentBundle,
    ParticipantModel,
    generate_synthetic_experiment,
    load_four_towers_fixture,
    make_mnk_manifest,
    parse_predictions_csv,
    parse_values_csv,
    read_bundle,
    serialize_predictions_csv,
    serialize_values_csv,
    write_bundle,
)
from predscore.errors import ParseError, ValidationError
from predscore.metrics import PredictionRecord, score_dataset
from predscore.oracle import AgentSpec, Mutation
from predscore.rankoverlap import agent_ranklist, mrbo_ext, vote_ranklist
from predscore.values import DecisionValues, OutcomeTriple


def random_bundle(seed, with_outcomes=False):
    rng = random.Random(seed)
    action_ids = [f"act{i}" for i in range(rng.randint(2, 8))]
    manifest = ActionManifest(
        experiment_id=f"exp{seed}",
        domain="custom",
        actions=tuple((a, f"Action {a}") for a in action_ids),
    )
    decisions = []
    for d in range(rng.randint(1, 4)):
        entries = {a: rng.uniform(-2, 2) for a in action_ids}
        outcomes = None
        if with_outcomes:
            outcomes = {}
            for a in action_ids:
                win = rng.uniform(0, 1)
                loss = rng.uniform(0, 1 - win)
                outcomes[a] = OutcomeTriple(win, loss, 1.0 - win - loss)
        decisions.append(
            DecisionValues(
                decision_id=f"P{d + 1}",
                entries=entries,
                chosen=max(entries, key=entries.get),
                outcomes=outcomes,
            )
        )
    treatments = tuple(f"T{i}" for i in range(rng.randint(1, 3)))
    predictions = []
    for i in range(rng.randint(0, 12)):
        predictions.append(
            PredictionRecord(
                participant_id=f"p{i:03d}",
                treatment=treatments[i % len(treatments)],
                decision_id=rng.choice(decisions).decision_id,
                predicted=rng.choice(action_ids),
            )
        )
    return ExperimentBundle(
        manifest=manifest,
        decisions=tuple(decisions),
        predictions=tuple(predictions),
        treatments=treatments,
    )


class TestCsvRoundTrip:
    def test_values_round_trip(self):
        for seed in range(25):
            bundle = random_bundle(seed, with_outcomes=seed % 2 == 0)
            parsed = parse_values_csv(serialize_values_csv(bundle.decisions).encode())
            assert tuple(parsed) == bundle.decisions

    def test_predictions_round_trip(self):
        for seed in range(25):
            bundle = random_bundle(seed)
            text = serialize_predictions_csv(bundle.predictions)
            parsed = parse_predictions_csv(
                text.encode(), bundle.manifest, [d.decision_id for d in bundle.decisions]
            )
            assert tuple(parsed) == bundle.predictions

    def test_bundle_directory_round_trip(self, tmp_path):
        for seed in range(8):
            bundle = random_bundle(seed, with_outcomes=True)
            path = write_bundle(bundle, tmp_path / f"b{seed}")
            assert read_bundle(path) == bundle

    def test_serialization_is_deterministic(self, tmp_path):
        bundle = random_bundle(3, with_outcomes=True)
        a = tmp_path / "a"
        b = tmp_path / "b"
        write_bundle(bundle, a)
        write_bundle(bundle, b)
        for name in ("manifest.json", "values.csv", "predictions.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


VALUES_4T = """decision_id,action,value,chosen
DP1,NE,31.0,1
DP1,NW,-28.0,0
DP1,SE,-284.0,0
DP1,SW,-313.0,0
"""


class TestParseValues:
    def test_four_towers_rows(self):
        decisions = parse_values_csv(VALUES_4T.encode())
        assert len(decisions) == 1
        dv = decisions[0]
        assert len(dv.entries) == 4
        assert dv.chosen == "NE"
        assert dv.value("NE") == 31.0

    def test_shape_many_decisions(self):
        bundle = generate_small()
        text = serialize_values_csv(bundle.decisions)
        parsed = parse_values_csv(text)
        assert len(parsed) == len(bundle.decisions) == 3
        # two pieces land between successive decisions of a 3x3 game
        assert [len(dv.entries) for dv in parsed] == [9, 7, 5]

    def test_double_chosen_rejected(self):
        bad = VALUES_4T.replace("DP1,NW,-28.0,0", "DP1,NW,-28.0,1")
        with pytest.raises(ParseError) as err:
            parse_values_csv(bad)
        assert err.value.row == 3
        assert err.value.column == "chosen"

    def test_no_chosen_rejected(self):
        bad = VALUES_4T.replace("DP1,NE,31.0,1", "DP1,NE,31.0,0")
        with pytest.raises(ParseError):
            parse_values_csv(bad)

    def test_duplicate_action_rejected(self):
        bad = VALUES_4T + "DP1,NE,31.0,0\n"
        with pytest.raises(ParseError) as err:
            parse_values_csv(bad)
        assert err.value.row == 6

    def test_non_numeric_value_rejected(self):
        bad = VALUES_4T.replace("31.0", "high")
        with pytest.raises(ParseError) as err:
            parse_values_csv(bad)
        assert err.value.column == "value"

    def test_bad_header_rejected(self):
        with pytest.raises(ParseError):
            parse_values_csv(b"foo,bar\n1,2\n")

    def test_triple_sum_enforced(self):
        text = (
            "decision_id,action,value,chosen,win,loss,draw\n"
            "d,x,0.5,1,0.6,0.3,0.2\n"
            "d,y,0.1,0,,,\n"
        )
        with pytest.raises(ParseError) as err:
            parse_values_csv(text)
        assert err.value.row == 2

    def test_partial_triple_rejected(self):
        text = (
            "decision_id,action,value,chosen,win,loss,draw\n"
            "d,x,0.5,1,0.6,0.4,\n"
        )
        with pytest.raises(ParseError):
            parse_values_csv(text)

    def test_crlf_and_bom_tolerated(self):
        crlf = VALUES_4T.replace("\n", "\r\n").encode("utf-8-sig")
        decisions = parse_values_csv(crlf)
        assert decisions[0].chosen == "NE"
        assert len(decisions[0].entries) == 4

    def test_sloppy_triple_normalized(self):
        text = (
            "decision_id,action,value,chosen,win,loss,draw\n"
            "d,x,0.5,1,0.6000001,0.3,0.1\n"
        )
        (dv,) = parse_values_csv(text)
        triple = dv.outcomes["x"]
        assert triple.win + triple.loss + triple.draw == pytest.approx(1.0, abs=1e-12)


class TestParsePredictions:
    def manifest(self):
        return make_mnk_manifest(BoardConfig(9, 4, 4), "exp")

    def test_count_shape(self):
        manifest = self.manifest()
        lines = ["participant_id,treatment,decision_id,predicted_action"]
        for i in range(86):
            for d in range(4):
                lines.append(f"p{i:03d},T{i % 8},P{d + 1},A1")
        records = parse_predictions_csv(
            "\n".join(lines) + "\n", manifest, [f"P{d + 1}" for d in range(4)]
        )
        assert len(records) == 344

    def test_unknown_action_rejected(self):
        text = "participant_id,treatment,decision_id,predicted_action\np1,T,P1,Z9\n"
        with pytest.raises(ParseError) as err:
            parse_predictions_csv(text, self.manifest(), ["P1"])
        assert err.value.row == 2
        assert err.value.column == "predicted_action"

    def test_unknown_decision_rejected(self):
        text = "participant_id,treatment,decision_id,predicted_action\np1,T,P9,A1\n"
        with pytest.raises(ParseError) as err:
            parse_predictions_csv(text, self.manifest(), ["P1"])
        assert err.value.column == "decision_id"

    def test_duplicate_participant_decision_rejected(self):
        text = (
            "participant_id,treatment,decision_id,predicted_action\n"
            "p1,T,P1,A1\n"
            "p1,T,P1,B1\n"
        )
        with pytest.raises(ParseError) as err:
            parse_predictions_csv(text, self.manifest(), ["P1"])
        assert err.value.row == 3

    def test_empty_file_with_header(self):
        text = "participant_id,treatment,decision_id,predicted_action\n"
        assert parse_predictions_csv(text, self.manifest(), ["P1"]) == []


def generate_small(seed=7, behavior=None, participants=6, mutation=None):
    return generate_synthetic_experiment(
        config=BoardConfig(3, 3, 3),
        agents=[AgentSpec(mutation=mutation)],
        participants=participants,
        treatments=["T0", "T1"],
        behavior=behavior or ParticipantModel(rank_probs=(0.6, 0.3, 0.1)),
        seed=seed,
        decisions_per_agent=3,
    )


class TestSyntheticGeneration:
    def test_same_seed_same_bundle(self):
        assert generate_small(seed=5) == generate_small(seed=5)

    def test_same_seed_identical_bytes(self, tmp_path):
        a = write_bundle(generate_small(seed=5), tmp_path / "a")
        b = write_bundle(generate_small(seed=5), tmp_path / "b")
        for name in ("manifest.json", "values.csv", "predictions.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_different_seeds_differ(self):
        assert generate_small(seed=5) != generate_small(seed=6)

    def test_always_best_scores_zero_everywhere(self):
        bundle = generate_small(behavior=ParticipantModel.always_best())
        samples = score_dataset(list(bundle.predictions), bundle.values_by_decision())
        assert samples
        assert all(s.lr == 0 and s.lv == 0.0 for s in samples)

    def test_always_best_with_unmutated_agent_hits_mrbo_one(self):
        bundle = generate_small(
            behavior=ParticipantModel.always_best(),
            mutation=Mutation(seed=3, magnitude=0.0),
        )
        for dv in bundle.decisions:
            group = [r for r in bundle.predictions if r.decision_id == dv.decision_id]
            score = mrbo_ext(vote_ranklist(group), agent_ranklist(dv))
            assert score == pytest.approx(1.0, abs=1e-12)

    def test_uniform_model_mean_rank_loss(self):
        # 36 actions, uniform predictions: mean LR converges to 35/2 = 17.5.
        bundle = generate_synthetic_experiment(
            config=BoardConfig(9, 4, 4),
            agents=[AgentSpec(oracle="sampled", rollouts=16, seed=99)],
            participants=2500,
            treatments=["T"],
            behavior=ParticipantModel.uniform(),
            seed=42,
            decisions_per_agent=4,
        )
        samples = score_dataset(list(bundle.predictions), bundle.values_by_decision())
        assert len(samples) == 10_000
        # Only the first decision offers all 36 actions; later boards have
        # fewer empty squares, so restrict to P1.
        p1 = [s.lr for s in samples if s.decision_id == "P1"]
        assert len(p1) == 2500
        mean = sum(p1) / len(p1)
        assert abs(mean - 17.5) <= 0.5

    def test_validation(self):
        with pytest.raises(ValidationError):
            generate_small(participants=0)
        with pytest.raises(ValidationError):
            generate_synthetic_experiment(
                config=BoardConfig(3, 3, 3),
                agents=[],
                participants=1,
                treatments=["T"],
                behavior=ParticipantModel.uniform(),
                seed=1,
            )


class TestParticipantModel:
    def test_rank_probs_validation(self):
        with pytest.raises(ValidationError):
            ParticipantModel(rank_probs=())
        with pytest.raises(ValidationError):
            ParticipantModel(rank_probs=(-0.2, 1.2))
        with pytest.raises(ValidationError):
            ParticipantModel(rank_probs=(0.0, 0.0))

    def test_always_best_predicts_top_rank(self):
        dv = DecisionValues("d", {"x": 1.0, "y": 0.5}, chosen="x")
        rng = random.Random(0)
        model = ParticipantModel.always_best()
        assert all(model.sample(dv, rng) == "x" for _ in range(20))

    def test_truncates_to_available_ranks(self):
        dv = DecisionValues("d", {"x": 1.0, "y": 0.5}, chosen="x")
        model = ParticipantModel(rank_probs=(0.5, 0.25, 0.25))  # 3 ranks, 2 actions
        rng = random.Random(1)
        picks = {model.sample(dv, rng) for _ in range(50)}
        assert picks == {"x", "y"}


class TestFourTowersFixture:
    def test_dp1_values(self):
        bundle = load_four_towers_fixture()
        (dp1,) = bundle.decisions
        assert dp1.decision_id == "DP1"
        assert dp1.value(dp1.chosen) == 31.0
        assert sorted(dp1.entries.values(), reverse=True) == [31.0, -28.0, -284.0, -313.0]

    def test_values_within_published_range(self):
        bundle = load_four_towers_fixture()
        lo, hi = FOUR_TOWERS_VALUE_RANGE
        for dv in bundle.decisions:
            assert all(lo <= v <= hi for v in dv.entries.values())

    def test_thirteen_decisions_pending(self):
        bundle = load_four_towers_fixture()
        assert len(bundle.incomplete_decision_ids) == 13
        assert bundle.incomplete_decision_ids == tuple(f"DP{i}" for i in range(2, 15))
        assert all(actions == QUADRANTS for _, actions in bundle.pending_decisions)

    def test_round_trips_through_directory(self, tmp_path):
        bundle = load_four_towers_fixture()
        assert read_bundle(write_bundle(bundle, tmp_path / "ft")) == bundle


class TestBundleValidation:
    def test_prediction_for_unknown_decision_rejected(self):
        bundle = random_bundle(1)
        bad = PredictionRecord("p", bundle.treatments[0], "nope", bundle.manifest.action_ids[0])
        with pytest.raises(ValidationError):
            ExperimentBundle(
                manifest=bundle.manifest,
                decisions=bundle.decisions,
                predictions=bundle.predictions + (bad,),
                treatments=bundle.treatments,
            )

    def test_prediction_for_unknown_action_rejected(self):
        bundle = random_bundle(1)
        bad = PredictionRecord(
            "p", bundle.treatments[0], bundle.decisions[0].decision_id, "nope"
        )
        with pytest.raises(ValidationError):
            ExperimentBundle(
                manifest=bundle.manifest,
                decisions=bundle.decisions,
                predictions=bundle.predictions + (bad,),
                treatments=bundle.treatments,
            )

    def test_mnk_manifest_requires_full_square_list(self):
        with pytest.raises(ValidationError):
            ActionManifest(
                experiment_id="x",
                domain="mnk",
                actions=(("A1", "A1"),),
                board=BoardConfig(3, 3, 3),
            )
