"""Shared builders and independent reference implementations.

The reference functions here are deliberately written from scratch, with
different algorithms than the package uses, so tests compare two
independent answers rather than the code against itself.
"""
from __future__ import annotations

import random

from simsforge.dataset import TrainingExample, default_token_count
from simsforge.dialogue import ACTIONS, DialogueScript, Turn

# no colons, parentheses or header words, so generated lines can never be
# mistaken for a turn head or a Background/Emotion/Conversation topic line
_WORDS = (
    "the a this that old new quiet loud market harbor garden letter tea"
    " coffee evening morning river song plan secret ladder window neighbor"
    " road promise winter summer chess violin recipe debt rumor festival"
).split()


def random_name(rng: random.Random) -> str:
    parts = [rng.choice(_WORDS).capitalize() for _ in range(rng.randint(1, 2))]
    return " ".join(parts)


def random_line(rng: random.Random) -> str:
    words = [rng.choice(_WORDS) for _ in range(rng.randint(2, 8))]
    line = " ".join(words)
    return line + "." if rng.random() < 0.5 else line


def random_block(rng: random.Random, max_lines: int = 3) -> str:
    return "\n".join(random_line(rng) for _ in range(rng.randint(1, max_lines)))


def random_script(rng: random.Random, emotions: list[str], topics: list[str]) -> DialogueScript:
    main = random_name(rng)
    partner = random_name(rng)
    while partner == main:
        partner = random_name(rng)

    n = rng.randint(2, 12)
    speakers = [main if rng.random() < 0.6 else partner for _ in range(n)]
    # both parties must get a word in
    speakers[0] = main
    speakers[rng.randrange(1, n)] = partner
    turns = []
    for speaker in speakers:
        action = rng.choice(ACTIONS) if speaker == main else "speaking"
        turns.append(Turn(speaker=speaker, action=action, text=random_block(rng)))

    return DialogueScript(
        character_id=main.lower().replace(" ", "-"),
        partner_id=partner.lower().replace(" ", "-"),
        scene_index=rng.randint(1, 20),
        main_name=main,
        partner_name=partner,
        background=random_block(rng),
        emotion=rng.choice(emotions),
        topic=rng.choice(topics),
        turns=turns,
    )


def make_script(
    character_id: str = "ada-quill",
    partner_id: str = "bo-marsh",
    scene_index: int = 1,
    emotion: str = "Fine",
    topic: str = "small talk",
    n_turns: int = 4,
) -> DialogueScript:
    """Small fixed script that passes every structural check."""
    turns = []
    for i in range(n_turns):
        if i % 2 == 0:
            turns.append(Turn("Ada Quill", "speaking", f"line {i} from ada"))
        else:
            turns.append(Turn("Bo Marsh", "speaking", f"line {i} from bo"))
    return DialogueScript(
        character_id=character_id,
        partner_id=partner_id,
        scene_index=scene_index,
        main_name="Ada Quill",
        partner_name="Bo Marsh",
        background="A quiet corner table at the harbor cafe.",
        emotion=emotion,
        topic=topic,
        turns=turns,
    )


def random_example(rng: random.Random, n_messages: int | None = None) -> TrainingExample:
    n = n_messages if n_messages is not None else rng.randint(1, 12)
    messages = []
    for i in range(n):
        messages.append({
            "role": "assistant" if i % 2 == 0 else "user",
            "speaker": "Ada" if i % 2 == 0 else "Bo",
            "action": "speaking",
            "text": " ".join(rng.choice(_WORDS) for _ in range(rng.randint(1, 60))),
        })
    return TrainingExample(
        character_id="ada-quill",
        system_text=" ".join(rng.choice(_WORDS) for _ in range(rng.randint(5, 80))),
        messages=messages,
        meta={"scene_index": 1, "emotion": "Fine", "topic": "small talk"},
    )


def longest_fitting_prefix(
    example: TrainingExample, budget: int, counter=default_token_count,
) -> list[dict] | None:
    """Reference truncation: try every prefix, longest first.

    Recounts from scratch, including the speaker/action framing around
    each message, instead of calling the package's accounting.
    """
    def cost(messages: list[dict]) -> int:
        total = counter(example.system_text)
        for m in messages:
            total += counter(f"{m['speaker']} ({m['action']}): {m['text']}")
        return total

    for k in range(len(example.messages), 0, -1):
        if cost(example.messages[:k]) <= budget:
            return example.messages[:k]
    return None


def edit_distance_matrix(a: str, b: str) -> int:
    """Reference Levenshtein via the full dynamic-programming table."""
    m, n = len(a), len(b)
    d = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        d[i][0] = i
    for j in range(n + 1):
        d[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost)
    return d[m][n]
