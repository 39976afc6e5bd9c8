import json

import pytest

from sumattack.errors import PoisonError, ProviderError
from sumattack.influence import InfluenceScores
from sumattack.metrics import toxicity_score
from sumattack.perturb import SplitMix64
from sumattack.poison import (
    AntonymTable,
    PoisonPlan,
    Replacement,
    ToxicTemplates,
    TransformKind,
    build_poisoned_dataset,
    contrastive_transform,
    load_plan,
    poison_count,
    save_plan,
    toxic_transform,
)


class TestAntonymTable:
    def test_builtin_is_involutive(self):
        table = AntonymTable.builtin()
        assert len(table) > 0
        for term in ("dropped", "good", "more", "win"):
            other = table.antonym(term)
            assert table.antonym(other) == term

    def test_published_pairs(self):
        table = AntonymTable.builtin()
        assert table.antonym("dropped") == "increased"
        assert table.antonym("bad") == "good"
        assert table.antonym("more") == "fewer"

    def test_lookup_is_case_insensitive(self):
        table = AntonymTable.builtin()
        assert table.antonym("Good") == "bad"
        assert "GOOD" in table

    def test_non_involutive_table_rejected(self):
        with pytest.raises(PoisonError, match="involutive"):
            AntonymTable({"hot": "cold"})
        with pytest.raises(PoisonError, match="involutive"):
            AntonymTable({"hot": "cold", "cold": "warm", "warm": "hot"})

    def test_self_mapping_rejected(self):
        with pytest.raises(PoisonError):
            AntonymTable({"same": "same"})

    def test_from_file(self, tmp_path):
        path = tmp_path / "antonyms.json"
        path.write_text(json.dumps({"wet": "dry", "dry": "wet"}))
        assert AntonymTable.from_file(path).antonym("wet") == "dry"


class TestContrastiveTransform:
    def test_swaps_antonyms_and_preserves_case(self):
        result = contrastive_transform("Good crews won more praise.")
        assert result.text == "Bad crews lost fewer criticism."
        assert result.changed
        assert ("Good", "Bad") in result.edits

    def test_double_application_round_trips_antonym_words(self):
        original = "Good crews won more praise."
        once = contrastive_transform(original)
        twice = contrastive_transform(once.text)
        assert twice.text == original

    def test_untouched_sentence_gains_not_after_auxiliary(self):
        result = contrastive_transform("The bridge is open.")
        assert result.text == "The bridge is not open."
        assert result.changed

    def test_existing_not_is_dropped(self):
        result = contrastive_transform("The bridge is not open.")
        assert result.text == "The bridge is open."

    def test_not_toggle_only_in_antonym_free_sentences(self):
        result = contrastive_transform("The outcome was good. The bridge is open.")
        assert result.text == "The outcome was bad. The bridge is not open."

    def test_sentence_count_is_preserved(self, clusters):
        for cluster in clusters:
            result = contrastive_transform(cluster.reference_summary)
            assert result.changed
            from sumattack.corpus import segment_sentences

            assert len(segment_sentences(result.text)) == len(
                segment_sentences(cluster.reference_summary)
            )

    def test_neutral_sentence_without_auxiliary_is_unchanged(self):
        result = contrastive_transform("Seven boats drifted past.")
        assert not result.changed
        assert result.text == "Seven boats drifted past."

    def test_empty_summary_rejected(self):
        with pytest.raises(PoisonError):
            contrastive_transform("")

    def test_unknown_provider_rejected(self):
        with pytest.raises(PoisonError):
            contrastive_transform("Some text.", provider="llm")

    def test_remote_provider_uses_completion(self):
        prompts = []

        def complete(prompt):
            prompts.append(prompt)
            return "Inverted text."

        result = contrastive_transform("Original text.", provider="remote", complete=complete)
        assert result.text == "Inverted text."
        assert "invert the sentiment" in prompts[0]
        assert prompts[0].endswith("Original text.")

    def test_remote_provider_requires_callable(self):
        with pytest.raises(ProviderError):
            contrastive_transform("Text.", provider="remote")

    def test_remote_empty_response_is_an_error(self):
        with pytest.raises(ProviderError):
            contrastive_transform("Text.", provider="remote", complete=lambda p: "  ")


class TestToxicTransform:
    def test_appends_one_template_sentence(self):
        pool = ToxicTemplates(["Mild insult one.", "Mild insult two."])
        result = toxic_transform("The dam held.", templates=pool, seed=0)
        assert result.text.startswith("The dam held. ")
        appended = result.text[len("The dam held. "):]
        assert appended in ("Mild insult one.", "Mild insult two.")
        assert result.changed
        assert result.edits == (("", appended),)

    def test_seed_determines_the_pick(self):
        pool = ToxicTemplates([f"Template {i}." for i in range(8)])
        a = toxic_transform("Base.", templates=pool, seed=41)
        b = toxic_transform("Base.", templates=pool, seed=41)
        c = toxic_transform("Base.", templates=pool, seed=42)
        assert a.text == b.text
        picks = {toxic_transform("Base.", templates=pool, seed=s).text for s in range(32)}
        assert len(picks) > 1
        assert c.text in picks

    def test_quarantine_file_loads_without_comments(self):
        pool = ToxicTemplates.builtin()
        assert len(pool) > 0
        for seed in range(5):
            assert not pool.pick(seed).startswith("#")

    def test_empty_pool_rejected(self):
        with pytest.raises(PoisonError):
            ToxicTemplates(["# only a comment", "   "])

    def test_empty_summary_rejected(self):
        with pytest.raises(PoisonError):
            toxic_transform("")

    def test_output_scores_at_least_the_input(self, clusters):
        for cluster in clusters:
            before = toxicity_score(cluster.reference_summary).severe_toxicity
            out = toxic_transform(cluster.reference_summary, seed=3).text
            assert toxicity_score(out).severe_toxicity >= before

    def test_low_gate_keeps_the_seeded_pick(self):
        text = "The dam held."
        gated = toxic_transform(text, seed=5, min_toxicity=1e-6)
        assert gated.text == toxic_transform(text, seed=5).text

    def test_gate_probes_past_a_clean_template(self):
        pool = ToxicTemplates(["Perfectly fine sentence.", "Utter rubbish and garbage."])
        # find a seed whose draw lands on the clean template first
        seed = next(s for s in range(64) if SplitMix64(s).randbelow(2) == 0)
        ungated = toxic_transform("Base text here.", templates=pool, seed=seed)
        assert ungated.text.endswith("Perfectly fine sentence.")
        gated = toxic_transform(
            "Base text here.", templates=pool, seed=seed, min_toxicity=0.01
        )
        assert gated.text.endswith("Utter rubbish and garbage.")

    def test_unreachable_gate_rejected(self):
        with pytest.raises(PoisonError, match="gate"):
            toxic_transform("The dam held.", seed=0, min_toxicity=1.0)


class TestPoisonCount:
    @pytest.mark.parametrize(
        "rate,expected",
        [(0.025, 50), (0.05, 100), (0.1, 200), (0.2, 400), (0.3, 600), (0.4, 800), (0.5, 1000)],
    )
    def test_published_ladder_for_2000_rows(self, rate, expected):
        assert poison_count(rate, 2000) == expected

    def test_rounds_half_up(self):
        assert poison_count(0.5, 3) == 2
        assert poison_count(0.1, 4) == 0

    def test_rate_bounds(self):
        with pytest.raises(PoisonError):
            poison_count(0.0, 10)
        with pytest.raises(PoisonError):
            poison_count(1.1, 10)


def scores_for(clusters, order=None):
    ids = order or [c.id for c in clusters]
    values = {cid: float(len(ids) - i) for i, cid in enumerate(ids)}
    return InfluenceScores(scores=values, ranking=tuple(ids))


class TestBuildPoisonedDataset:
    def test_targets_follow_the_influence_ranking(self, clusters):
        ranking = [c.id for c in reversed(clusters)]
        poisoned, plan = build_poisoned_dataset(
            clusters, scores_for(clusters, ranking), rate=0.25, kind=TransformKind.CONTRASTIVE
        )
        assert plan.target_ids == tuple(ranking[:2])
        assert len(poisoned) == len(clusters)

    def test_documents_stay_byte_identical(self, clusters):
        poisoned, plan = build_poisoned_dataset(
            clusters, scores_for(clusters), rate=0.5, kind=TransformKind.CONTRASTIVE
        )
        for before, after in zip(clusters, poisoned):
            assert after.documents is before.documents
            for da, db in zip(before.documents, after.documents):
                assert da.raw_text == db.raw_text

    def test_only_target_summaries_change(self, clusters):
        poisoned, plan = build_poisoned_dataset(
            clusters, scores_for(clusters), rate=0.25, kind=TransformKind.CONTRASTIVE
        )
        targets = set(plan.target_ids)
        for before, after in zip(clusters, poisoned):
            if before.id in targets:
                assert after.reference_summary != before.reference_summary
            else:
                assert after.reference_summary == before.reference_summary

    def test_manifest_hashes_both_sides(self, clusters):
        import hashlib

        poisoned, plan = build_poisoned_dataset(
            clusters, scores_for(clusters), rate=0.25, kind=TransformKind.TOXIC, seed=5
        )
        by_id = {c.id: c for c in clusters}
        poisoned_by_id = {c.id: c for c in poisoned}
        for rep in plan.replacements:
            original = by_id[rep.id].reference_summary
            new = poisoned_by_id[rep.id].reference_summary
            assert rep.original_summary_hash == hashlib.sha256(original.encode()).hexdigest()
            assert rep.new_summary_hash == hashlib.sha256(new.encode()).hexdigest()
            assert rep.original_summary_hash != rep.new_summary_hash

    def test_toxic_seed_reproducibility(self, clusters):
        a = build_poisoned_dataset(
            clusters, scores_for(clusters), rate=0.5, kind=TransformKind.TOXIC, seed=9
        )
        b = build_poisoned_dataset(
            clusters, scores_for(clusters), rate=0.5, kind=TransformKind.TOXIC, seed=9
        )
        assert [c.reference_summary for c in a[0]] == [c.reference_summary for c in b[0]]
        assert a[1] == b[1]

    def test_toxicity_gate_reaches_the_transform(self, clusters):
        with pytest.raises(PoisonError, match="gate"):
            build_poisoned_dataset(
                clusters, scores_for(clusters), rate=0.25,
                kind=TransformKind.TOXIC, min_toxicity=1.0,
            )

    def test_zero_count_plan_rejected(self, clusters):
        with pytest.raises(PoisonError, match="empty plan"):
            build_poisoned_dataset(
                clusters, scores_for(clusters), rate=0.01, kind=TransformKind.CONTRASTIVE
            )

    def test_unscored_corpus_rejected(self, clusters):
        partial = scores_for(clusters[:1])
        with pytest.raises(PoisonError, match="scored rows"):
            build_poisoned_dataset(partial and clusters, partial, rate=0.5, kind=TransformKind.TOXIC)

    def test_plan_json_round_trip(self, clusters, tmp_path):
        _, plan = build_poisoned_dataset(
            clusters, scores_for(clusters), rate=0.25, kind=TransformKind.CONTRASTIVE, seed=3
        )
        path = tmp_path / "plan.json"
        save_plan(plan, path)
        assert load_plan(path) == plan
        keys = set(json.loads(path.read_text()))
        assert keys == {"rate", "kind", "provider", "seed", "replacements"}

    def test_plan_replacement_fields(self, clusters):
        _, plan = build_poisoned_dataset(
            clusters, scores_for(clusters), rate=0.25, kind=TransformKind.CONTRASTIVE
        )
        rep = plan.replacements[0]
        assert isinstance(rep, Replacement)
        assert set(plan.to_json()["replacements"][0]) == {
            "id", "original_summary_hash", "new_summary_hash",
        }

    def test_plan_kind_survives_serialization(self):
        plan = PoisonPlan(
            rate=0.1, kind=TransformKind.TOXIC, provider="rule_based", seed=0, replacements=()
        )
        assert PoisonPlan.from_json(plan.to_json()).kind is TransformKind.TOXIC
