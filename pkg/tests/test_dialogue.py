from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import make_script, random_script
from simsforge.dialogue import (
    DEFAULT_QC_RHO,
    DialogueScript,
    QcLedger,
    ReviewVerdict,
    Turn,
    apply_reviews,
    build_dialogue_prompt,
    generate_dialogue,
    parse_script,
    qc_sample,
    render_script,
    script_violations,
)
from simsforge.errors import (
    BadAction,
    EmptyScript,
    MissingHeader,
    UnknownScriptRef,
    UnknownSpeaker,
    UnparseableAfterRetry,
)
from simsforge.provider.mock import MockProvider
from simsforge.scene import Scene

# the same short exchange written in the two surface forms the parser accepts

INLINE_FORM = """Background:
The launch viewing deck, an hour before sunrise.
Emotion: Angry
Conversation topic: complaints

Zephyr Orion (thinking): Another delay and nobody thought to tell me first.
Zephyr Orion (speaking): They moved the window again, Eve.
Evelyn Hale (speaking): I heard. Third time this quarter.
Zephyr Orion (speaking): Someone upstairs owes us an explanation."""

NAME_LINE_FORM = """Background:
The launch viewing deck, an hour before sunrise.
Emotion: Angry
Conversation topic: complaints

Zephyr Orion (thinking)
Another delay and nobody thought to tell me first.

Zephyr Orion (speaking)
They moved the window again, Eve.

Evelyn Hale (speaking)
I heard. Third time this quarter.

Zephyr Orion (speaking)
Someone upstairs owes us an explanation."""


# -- parsing ------------------------------------------------------------------------


def test_parse_inline_form():
    s = parse_script(INLINE_FORM, "Zephyr Orion", "Evelyn Hale")
    assert s.emotion == "Angry"
    assert s.topic == "complaints"
    assert s.background == "The launch viewing deck, an hour before sunrise."
    assert len(s.turns) == 4
    assert s.turns[0] == Turn(
        "Zephyr Orion", "thinking",
        "Another delay and nobody thought to tell me first.",
    )


def test_both_surface_forms_parse_identically():
    a = parse_script(INLINE_FORM, "Zephyr Orion", "Evelyn Hale")
    b = parse_script(NAME_LINE_FORM, "Zephyr Orion", "Evelyn Hale")
    assert a == b


def test_parse_joins_continuation_lines():
    raw = (
        "Background: Dock.\nEmotion: Fine\nConversation topic: stories\n\n"
        "Ada Quill (speaking): The net came up heavier than usual,\n"
        "so we counted twice before telling anyone.\n"
        "Bo Marsh (speaking): Smart."
    )
    s = parse_script(raw, "Ada Quill", "Bo Marsh")
    assert s.turns[0].text == (
        "The net came up heavier than usual,\nso we counted twice before telling anyone."
    )
    assert len(s.turns) == 2


def test_parse_ignores_leadin_prose():
    raw = (
        "Sure, here is the script you asked for.\n\n"
        "Background: Dock.\nEmotion: Fine\nConversation topic: stories\n\n"
        "Ada Quill (speaking): Ready when you are.\n"
        "Bo Marsh (speaking): Go ahead."
    )
    s = parse_script(raw, "Ada Quill", "Bo Marsh")
    assert len(s.turns) == 2


def test_parse_multiline_background():
    raw = (
        "Background:\nA narrow kitchen.\nSomething is burning quietly.\n"
        "Emotion: Fine\nConversation topic: food\n\n"
        "Ada Quill (speaking): Do you smell that?\n"
        "Bo Marsh (speaking): No."
    )
    s = parse_script(raw, "Ada Quill", "Bo Marsh")
    assert s.background == "A narrow kitchen.\nSomething is burning quietly."


def test_parse_rejects_unknown_speaker():
    raw = INLINE_FORM + "\nRandom Stranger (speaking): Let me in."
    with pytest.raises(UnknownSpeaker):
        parse_script(raw, "Zephyr Orion", "Evelyn Hale")


def test_parse_rejects_unknown_action():
    raw = INLINE_FORM + "\nZephyr Orion (shouting): Enough!"
    with pytest.raises(BadAction):
        parse_script(raw, "Zephyr Orion", "Evelyn Hale")


def test_parse_requires_all_headers():
    raw = (
        "Background: Dock.\nConversation topic: stories\n\n"
        "Ada Quill (speaking): Hm.\nBo Marsh (speaking): Hm."
    )
    with pytest.raises(MissingHeader) as e:
        parse_script(raw, "Ada Quill", "Bo Marsh")
    assert "Emotion" in str(e.value)


def test_parse_rejects_empty_turn():
    raw = (
        "Background: Dock.\nEmotion: Fine\nConversation topic: stories\n\n"
        "Ada Quill (speaking)\n\nBo Marsh (speaking): Hello?"
    )
    with pytest.raises(EmptyScript):
        parse_script(raw, "Ada Quill", "Bo Marsh")


def test_parse_rejects_turnless_reply():
    raw = "Background: Dock.\nEmotion: Fine\nConversation topic: stories\n\nnothing else"
    with pytest.raises(EmptyScript):
        parse_script(raw, "Ada Quill", "Bo Marsh")


# -- rendering ----------------------------------------------------------------------


def test_render_contains_steering_lines():
    s = make_script(emotion="Angry", topic="complaints")
    text = render_script(s)
    assert "Emotion: Angry" in text.split("\n")
    assert "Conversation topic: complaints" in text.split("\n")


def test_render_parse_roundtrip_fixed_case():
    s = make_script()
    back = parse_script(
        render_script(s), s.main_name, s.partner_name,
        character_id=s.character_id, partner_id=s.partner_id,
        scene_index=s.scene_index,
    )
    assert back == s


def test_roundtrip_seeded_random_scripts(catalog):
    rng = random.Random(2024)
    emotions = list(catalog.emotions)
    topics = list(catalog.topics)
    for _ in range(200):
        s = random_script(rng, emotions, topics)
        back = parse_script(
            render_script(s), s.main_name, s.partner_name,
            character_id=s.character_id, partner_id=s.partner_id,
            scene_index=s.scene_index,
        )
        assert back == s


@given(st.integers(min_value=0, max_value=10 ** 9))
@settings(max_examples=80, deadline=None)
def test_roundtrip_property(seed):
    rng = random.Random(seed)
    s = random_script(rng, ["Fine", "Angry"], ["stories", "small talk"])
    back = parse_script(
        render_script(s), s.main_name, s.partner_name,
        character_id=s.character_id, partner_id=s.partner_id,
        scene_index=s.scene_index,
    )
    assert back == s


def test_script_dict_roundtrip():
    s = make_script()
    assert DialogueScript.from_dict(s.to_dict()) == s


# -- structural checks ---------------------------------------------------------------


def test_violations_clean_script(catalog):
    assert script_violations(make_script(), catalog) == []


def test_violations_partner_must_not_think(catalog):
    s = make_script()
    s.turns[1] = Turn("Bo Marsh", "thinking", "quiet doubt")
    assert any("think" in v for v in script_violations(s, catalog))


def test_violations_both_parties_must_speak(catalog):
    s = make_script()
    s.turns = [t for t in s.turns if t.speaker == "Ada Quill"]
    assert script_violations(s, catalog)


def test_violations_labels_checked_against_catalog(catalog):
    s = make_script(emotion="Furious")
    assert any("Furious" in v for v in script_violations(s, catalog))
    s2 = make_script(topic="cryptocurrency")
    assert any("cryptocurrency" in v for v in script_violations(s2, catalog))


def test_violations_without_catalog_skip_label_checks():
    s = make_script(emotion="Furious")
    assert script_violations(s) == []


# -- prompt -------------------------------------------------------------------------


@pytest.fixture()
def scene(record):
    return Scene(record.id, 4, "chat", "NASA Headquarters",
                 "A long corridor after a cancelled briefing.")


def test_build_dialogue_prompt_slots(record, partner, scene, catalog):
    prompt = build_dialogue_prompt(record, partner, scene, "Angry", "complaints", catalog)
    assert "Emotion: Angry" in prompt
    assert f"You are chatting with {partner.profile.name}" in prompt
    assert "(small talk), and (stories)" in prompt
    assert "Location: NASA Headquarters" in prompt
    assert f"The main character is {record.profile.name}" in prompt


def test_build_dialogue_prompt_canonicalizes_labels(record, partner, scene, catalog):
    prompt = build_dialogue_prompt(record, partner, scene, "aNgRy", "Complaints", catalog)
    assert "Emotion: Angry" in prompt


def test_build_dialogue_prompt_rejects_self_chat(record, scene, catalog):
    with pytest.raises(ValueError):
        build_dialogue_prompt(record, record, scene, "Angry", "complaints", catalog)


# -- generation ----------------------------------------------------------------------


def _scripted_reply(record, partner) -> str:
    return (
        "Background: A shared desk by the window.\n"
        "Emotion: Happy\n"
        "Conversation topic: weather\n\n"
        f"{record.profile.name} (speaking): Rain again, look at it.\n"
        f"{partner.profile.name} (speaking): Good for the garden at least."
    )


def test_generate_dialogue_single_call(record, partner, scene, catalog):
    m = MockProvider(seed=0)
    m.push("dialogue", _scripted_reply(record, partner))
    script, raw = generate_dialogue(record, partner, scene, "Angry", "complaints", m, catalog)
    assert len(m.requests) == 1
    assert script.character_id == record.id
    assert script.partner_id == partner.id
    assert script.scene_index == scene.index
    assert raw == _scripted_reply(record, partner)


def test_generate_dialogue_requested_steering_wins(record, partner, scene, catalog):
    # the reply echoes different labels; the requested ones must stick
    m = MockProvider(seed=0)
    m.push("dialogue", _scripted_reply(record, partner))
    script, _ = generate_dialogue(record, partner, scene, "angry", "complaints", m, catalog)
    assert script.emotion == "Angry"
    assert script.topic == "complaints"


def test_generate_dialogue_retries_bad_reply_once(record, partner, scene, catalog):
    m = MockProvider(seed=0)
    m.push("dialogue", "no structure at all", _scripted_reply(record, partner))
    script, _ = generate_dialogue(record, partner, scene, "Angry", "complaints", m, catalog)
    assert len(m.requests) == 2
    assert "reminder" in m.requests[1].user.lower() or m.requests[1].user != m.requests[0].user
    assert script.turns


def test_generate_dialogue_gives_up_after_retry(record, partner, scene, catalog):
    m = MockProvider(seed=0)
    m.push("dialogue", "garbage one", "garbage two")
    with pytest.raises(UnparseableAfterRetry) as e:
        generate_dialogue(record, partner, scene, "Angry", "complaints", m, catalog)
    assert "first:" in str(e.value)
    assert "retry:" in str(e.value)


def test_generate_dialogue_partner_thinking_is_rejected(record, partner, scene, catalog):
    bad = (
        "Background: Desk.\nEmotion: Happy\nConversation topic: weather\n\n"
        f"{record.profile.name} (speaking): Hm.\n"
        f"{partner.profile.name} (thinking): Should I say it?"
    )
    m = MockProvider(seed=0)
    m.push("dialogue", bad, bad)
    with pytest.raises(UnparseableAfterRetry) as e:
        generate_dialogue(record, partner, scene, "Angry", "complaints", m, catalog)
    assert "think" in str(e.value)


def test_generate_dialogue_synthesized(record, partner, scene, catalog):
    script, _ = generate_dialogue(
        record, partner, scene, "Angry", "complaints", MockProvider(seed=4), catalog,
    )
    assert script_violations(script, catalog) == []
    assert 8 <= len(script.turns) <= 13


# -- review sampling -----------------------------------------------------------------


def _many_scripts(n: int) -> list[DialogueScript]:
    return [
        make_script(character_id=f"char-{i // 20}", scene_index=i % 20 + 1)
        for i in range(n)
    ]


def test_qc_sample_size_is_half_rounded_up():
    assert DEFAULT_QC_RHO == 0.5
    scripts = _many_scripts(101)
    assert len(qc_sample(scripts, rho=0.5, seed=1)) == math.ceil(50.5)


def test_qc_sample_deterministic_and_without_replacement():
    scripts = _many_scripts(40)
    a = qc_sample(scripts, rho=0.5, seed=9)
    b = qc_sample(scripts, rho=0.5, seed=9)
    assert [s.ref for s in a] == [s.ref for s in b]
    assert len({s.ref for s in a}) == len(a)
    c = qc_sample(scripts, rho=0.5, seed=10)
    assert [s.ref for s in c] != [s.ref for s in a]


def test_qc_sample_rho_bounds():
    scripts = _many_scripts(4)
    assert len(qc_sample(scripts, rho=1.0, seed=0)) == 4
    with pytest.raises(ValueError):
        qc_sample(scripts, rho=0.0, seed=0)
    with pytest.raises(ValueError):
        qc_sample(scripts, rho=1.2, seed=0)


def test_qc_sample_empty_corpus():
    assert qc_sample([], rho=0.5, seed=0) == []


# -- verdicts ------------------------------------------------------------------------


def test_apply_reviews_paper_rate():
    scripts = _many_scripts(200)
    sampled = qc_sample(scripts, rho=0.5, seed=0)
    refs = [s.ref for s in sampled]
    verdicts = [
        ReviewVerdict(script_ref=r, emotion_ok=i >= 13, topic_ok=True, reviewer="r1")
        for i, r in enumerate(refs)
    ]
    ledger = apply_reviews(scripts, verdicts, sampled_refs=refs)
    assert ledger.reviewed == 100
    assert ledger.aligned_count == 87
    assert ledger.alignment_rate == pytest.approx(0.87)
    assert len(ledger.failed_refs) == 13
    assert ledger.failed_refs == sorted(ledger.failed_refs)


def test_apply_reviews_rejects_refs_outside_sample():
    scripts = _many_scripts(10)
    refs = [s.ref for s in qc_sample(scripts, rho=0.5, seed=0)]
    outside = next(s.ref for s in scripts if s.ref not in refs)
    with pytest.raises(UnknownScriptRef):
        apply_reviews(
            scripts,
            [ReviewVerdict(script_ref=outside, emotion_ok=True, topic_ok=True)],
            sampled_refs=refs,
        )


def test_apply_reviews_latest_verdict_wins():
    scripts = _many_scripts(4)
    ref = scripts[0].ref
    verdicts = [
        ReviewVerdict(script_ref=ref, emotion_ok=False, topic_ok=True, reviewer="a"),
        ReviewVerdict(script_ref=ref, emotion_ok=True, topic_ok=True, reviewer="b"),
    ]
    ledger = apply_reviews(scripts, verdicts)
    assert ledger.reviewed == 1
    assert ledger.aligned_count == 1
    assert ledger.failed_refs == []


def test_apply_reviews_alignment_needs_both_flags():
    scripts = _many_scripts(2)
    ledger = apply_reviews(scripts, [
        ReviewVerdict(script_ref=scripts[0].ref, emotion_ok=True, topic_ok=False),
        ReviewVerdict(script_ref=scripts[1].ref, emotion_ok=False, topic_ok=True),
    ])
    assert ledger.aligned_count == 0
    assert len(ledger.failed_refs) == 2


def test_apply_reviews_empty():
    ledger = apply_reviews(_many_scripts(3), [])
    assert ledger.reviewed == 0
    assert ledger.alignment_rate is None


def test_ledger_dict_roundtrip():
    ledger = QcLedger(
        sampled_refs=["a/1", "b/2"], reviewed=2, aligned_count=1,
        alignment_rate=0.5, failed_refs=["b/2"],
    )
    assert QcLedger.from_dict(ledger.to_dict()) == ledger


def test_verdict_dict_roundtrip():
    v = ReviewVerdict(script_ref="a/1", emotion_ok=True, topic_ok=False,
                      reviewer="r2", note="emotion drifts midway")
    assert ReviewVerdict.from_dict(v.to_dict()) == v
    assert not v.aligned
