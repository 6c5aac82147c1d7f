"""Instruction-tuning export: JSONL corpus, token budgets, corpus stats."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, TextIO

from .dialogue import DialogueScript
from .errors import BudgetTooSmall, EmptyCorpus
from .persona import CharacterRecord
from .scene import Scene

DEFAULT_TOKEN_BUDGET = 4096

TokenCounter = Callable[[str], int]


def default_token_count(text: str) -> int:
    """Cheap proxy counter: one token per four characters, rounded up."""
    return (len(text) + 3) // 4


def compose_system_text(
    summary: str,
    name: str,
    location: str,
    status: str,
    emotion: str,
    topic: str,
) -> str:
    """The serving/system prompt layout used by both export and the agent."""
    return (
        f"{summary}\n\n"
        f"Respond and answer like {name}, using the tone, manner and vocabulary "
        f"{name} would use.\n\n"
        f"The status of you is as follows:\n\n"
        f"Location: {location}\n"
        f"Status: {status}\n"
        f"Emotion: {emotion}\n"
        f"Conversation Topic: {topic}"
    )


def turn_line(speaker: str, action: str, text: str) -> str:
    return f"{speaker} ({action}): {text}"


@dataclass
class TrainingExample:
    character_id: str
    system_text: str
    messages: list[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def ref(self) -> str:
        return f"{self.character_id}/{self.meta.get('scene_index', '?')}"

    def to_dict(self) -> dict:
        return {
            "system": self.system_text,
            "messages": [dict(m) for m in self.messages],
            "meta": dict(self.meta),
        }


def example_tokens(example: TrainingExample, counter: TokenCounter = default_token_count) -> int:
    total = counter(example.system_text)
    for m in example.messages:
        total += counter(turn_line(m["speaker"], m["action"], m["text"]))
    return total


def build_training_example(
    record: CharacterRecord,
    script: DialogueScript,
    scene: Scene,
    strip_thoughts: bool = False,
) -> TrainingExample:
    """Turn one script into a training example.

    The system text describes only the main character; partner turns
    become user messages, main-character turns become assistant messages.
    """
    system_text = compose_system_text(
        summary=record.summary,
        name=record.profile.name,
        location=scene.location,
        status=script.background,
        emotion=script.emotion,
        topic=script.topic,
    )
    messages = []
    for t in script.turns:
        if strip_thoughts and t.action == "thinking":
            continue
        messages.append({
            "role": "assistant" if t.speaker == script.main_name else "user",
            "speaker": t.speaker,
            "action": t.action,
            "text": t.text,
        })
    return TrainingExample(
        character_id=record.id,
        system_text=system_text,
        messages=messages,
        meta={
            "scene_index": script.scene_index,
            "emotion": script.emotion,
            "topic": script.topic,
        },
    )


def truncate_example(
    example: TrainingExample,
    budget: int = DEFAULT_TOKEN_BUDGET,
    counter: TokenCounter = default_token_count,
) -> TrainingExample:
    """Drop whole turns from the end until the example fits the budget.

    Equivalent to keeping the longest prefix of turns that fits. Raises
    when not even the first turn fits alongside the system text.
    """
    kept = list(example.messages)
    while kept:
        candidate = TrainingExample(
            character_id=example.character_id,
            system_text=example.system_text,
            messages=kept,
            meta=dict(example.meta),
        )
        if example_tokens(candidate, counter) <= budget:
            return candidate
        kept.pop()
    raise BudgetTooSmall(example.ref, budget)


def export_training(
    items: Iterable[tuple[CharacterRecord, DialogueScript, Scene]],
    out: TextIO,
    budget: int = DEFAULT_TOKEN_BUDGET,
    counter: TokenCounter = default_token_count,
    strip_thoughts: bool = False,
) -> int:
    """Write the corpus as JSONL, one example per script, stable order.

    Returns the number of lines written. Output carries no timestamps,
    so identical inputs produce byte-identical files.
    """
    ordered = sorted(items, key=lambda it: (it[0].id, it[1].scene_index))
    if not ordered:
        raise EmptyCorpus("nothing to export")
    written = 0
    for record, script, scene in ordered:
        example = build_training_example(record, script, scene, strip_thoughts=strip_thoughts)
        example = truncate_example(example, budget=budget, counter=counter)
        out.write(json.dumps(example.to_dict(), ensure_ascii=False) + "\n")
        written += 1
    return written


# ---------------------------------------------------------------------------
# corpus statistics

# Reference full-scale corpus shape, for the comparison block in stats.
FULL_SCALE_TARGETS = {
    "characters": 68,
    "scenes": 1360,
    "total_turns": 13971,
    "avg_turns_per_scene": 10.3,
    "emotions": 16,
    "topics": 18,
}


def compute_stats(scripts: list[DialogueScript]) -> dict:
    """Recompute corpus statistics from the scripts themselves."""
    if not scripts:
        raise EmptyCorpus("no scripts to summarise")
    emotions: dict[str, int] = {}
    topics: dict[str, int] = {}
    total_turns = 0
    characters = set()
    for s in scripts:
        characters.add(s.character_id)
        total_turns += len(s.turns)
        emotions[s.emotion] = emotions.get(s.emotion, 0) + 1
        topics[s.topic] = topics.get(s.topic, 0) + 1

    n_scenes = len(scripts)
    stats = {
        "characters": len(characters),
        "scenes": n_scenes,
        "total_turns": total_turns,
        "avg_turns_per_scene": total_turns / n_scenes,
        "emotion_histogram": dict(sorted(emotions.items())),
        "topic_histogram": dict(sorted(topics.items())),
        "targets": dict(FULL_SCALE_TARGETS),
    }
    # both histograms partition the same scripts
    assert sum(emotions.values()) == n_scenes
    assert sum(topics.values()) == n_scenes
    stats["full_scale"] = (
        stats["characters"] == FULL_SCALE_TARGETS["characters"]
        and n_scenes == FULL_SCALE_TARGETS["scenes"]
    )
    return stats


# ---------------------------------------------------------------------------
# fine-tune recipe

FINETUNE_CONFIG = {
    "base_model": "LLaMA-3-8B-Instruct",
    "epochs": 5,
    "optimizer": "AdamW",
    "peak_learning_rate": 3e-5,
    "warmup_steps": 100,
    "lr_schedule": "linear_decay",
    "per_device_batch_size": 4,
    "context_window_tokens": 4096,
    "deepspeed_zero_stage": 3,
}

_CONFIG_TYPES = {
    "base_model": str,
    "epochs": int,
    "optimizer": str,
    "peak_learning_rate": float,
    "warmup_steps": int,
    "lr_schedule": str,
    "per_device_batch_size": int,
    "context_window_tokens": int,
    "deepspeed_zero_stage": int,
}


def validate_finetune_config(config: dict) -> None:
    for key, kind in _CONFIG_TYPES.items():
        if key not in config:
            raise ValueError(f"finetune config missing {key}")
        if not isinstance(config[key], kind):
            raise ValueError(f"finetune config field {key} must be {kind.__name__}")
    for key in ("epochs", "warmup_steps", "per_device_batch_size", "context_window_tokens"):
        if config[key] <= 0:
            raise ValueError(f"finetune config field {key} must be positive")
    if not (0 < config["peak_learning_rate"] < 1):
        raise ValueError("peak_learning_rate out of range")


def export_finetune_config() -> dict:
    config = dict(FINETUNE_CONFIG)
    validate_finetune_config(config)
    return config
