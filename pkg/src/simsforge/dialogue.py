"""Dialogue scripts: generation, parsing, canonical rendering, and QC.

A script is one scene played out between a main character and a partner,
under a requested emotion and conversation topic. The main character may
think or speak; the partner only speaks. Scripts are referenced as
``{character_id}/{scene_index}`` throughout.
"""

from __future__ import annotations

import logging
import math
import random
import re
from dataclasses import dataclass, field

from .catalog import AspectCatalog
from .errors import (
    BadAction,
    EmptyScript,
    InvalidLabel,
    MissingHeader,
    ParseError,
    UnknownScriptRef,
    UnknownSpeaker,
    UnparseableAfterRetry,
)
from .persona import CharacterRecord, fill_template, load_template
from .provider.base import ChatRequest, Provider
from .scene import Scene

ACTIONS = ("speaking", "thinking")

DEFAULT_QC_RHO = 0.5

# the prompt asks for at least this many words; shorter scripts are
# accepted with a warning because desk-scale providers rarely comply
TARGET_SCRIPT_WORDS = 1500

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Turn:
    speaker: str
    action: str
    text: str

    def to_dict(self) -> dict:
        return {"speaker": self.speaker, "action": self.action, "text": self.text}

    @classmethod
    def from_dict(cls, d: dict) -> "Turn":
        return cls(speaker=str(d["speaker"]), action=str(d["action"]), text=str(d["text"]))


@dataclass
class DialogueScript:
    character_id: str
    partner_id: str
    scene_index: int
    main_name: str
    partner_name: str
    background: str
    emotion: str
    topic: str
    turns: list[Turn] = field(default_factory=list)

    @property
    def ref(self) -> str:
        return f"{self.character_id}/{self.scene_index}"

    def to_dict(self) -> dict:
        return {
            "character_id": self.character_id,
            "partner_id": self.partner_id,
            "scene_index": self.scene_index,
            "main_name": self.main_name,
            "partner_name": self.partner_name,
            "background": self.background,
            "emotion": self.emotion,
            "topic": self.topic,
            "turns": [t.to_dict() for t in self.turns],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DialogueScript":
        return cls(
            character_id=str(d["character_id"]),
            partner_id=str(d["partner_id"]),
            scene_index=int(d["scene_index"]),
            main_name=str(d["main_name"]),
            partner_name=str(d["partner_name"]),
            background=str(d["background"]),
            emotion=str(d["emotion"]),
            topic=str(d["topic"]),
            turns=[Turn.from_dict(t) for t in d.get("turns", [])],
        )


# ---------------------------------------------------------------------------
# prompt

def build_dialogue_prompt(
    main: CharacterRecord,
    partner: CharacterRecord,
    scene: Scene,
    emotion: str,
    topic: str,
    catalog: AspectCatalog,
) -> str:
    if main.id == partner.id:
        raise ValueError("partner must be a different character")
    emotion = catalog.canonical("emotions", emotion)
    topic = catalog.canonical("topics", topic)
    return fill_template(load_template("dialogue"), {
        "character_summary": main.summary,
        "second_character_name": partner.profile.name,
        "second_character_summary": partner.summary,
        "scene_type": scene.scene_type.capitalize(),
        "location": scene.location,
        "status": scene.background,
        "emotion": emotion,
        "emotion_description": catalog.description(emotion) or emotion,
        "topic": topic,
        "character_name": main.profile.name,
    })


# ---------------------------------------------------------------------------
# parsing

_TURN_HEAD = re.compile(r"^(.+?)\s*\(([A-Za-z]+)\)\s*(?::\s*(.*))?$")

# header text on the same line or the following lines, until the next header
_HEADERS = ("background", "emotion", "conversation topic")


def _match_header(line: str) -> tuple[str, str] | None:
    low = line.lower()
    for h in _HEADERS:
        if low.startswith(h + ":"):
            return h, line[len(h) + 1:].strip()
    return None


def parse_script(
    raw: str,
    main_name: str,
    partner_name: str,
    character_id: str = "",
    partner_id: str = "",
    scene_index: int = 0,
) -> DialogueScript:
    """Parse a generated script.

    Accepts both turn layouts: the action line followed by the utterance
    on the next line, and the inline `Name (speaking): utterance` form.
    Unattributed lines continue the current turn; blank lines separate
    turns.
    """
    known = {main_name.strip(), partner_name.strip()}
    headers: dict[str, str] = {}
    turns: list[Turn] = []
    current: list[str] | None = None  # [speaker, action, *lines]
    pending_header: str | None = None

    def close_turn():
        nonlocal current
        if current is not None:
            speaker, action, *lines = current
            text = "\n".join(lines).strip()
            if not text:
                raise EmptyScript(f"turn by {speaker} has no text")
            turns.append(Turn(speaker=speaker, action=action, text=text))
            current = None

    for line in raw.splitlines():
        stripped = line.strip()

        if current is None and len(headers) < len(_HEADERS):
            hm = _match_header(stripped)
            if hm:
                key, value = hm
                headers.setdefault(key, value)
                pending_header = key if not value else None
                continue

        tm = _TURN_HEAD.match(stripped)
        if tm:
            name, action, rest = tm.group(1).strip(), tm.group(2).lower(), tm.group(3)
            name_known = name in known
            if name_known and action not in ACTIONS:
                raise BadAction(tm.group(2))
            if action in ACTIONS and not name_known:
                raise UnknownSpeaker(name)
            if name_known:
                close_turn()
                pending_header = None
                current = [name, action]
                if rest:
                    current.append(rest)
                continue

        if not stripped:
            close_turn()
        elif current is not None:
            current.append(stripped)
        elif pending_header:
            headers[pending_header] = (headers[pending_header] + "\n" + stripped).strip()
        # other prose outside any turn (e.g. a lead-in line) is ignored

    close_turn()

    for key in _HEADERS:
        if key not in headers or not headers[key].strip():
            raise MissingHeader(key.capitalize())
    if not turns:
        raise EmptyScript("no turns found")

    return DialogueScript(
        character_id=character_id,
        partner_id=partner_id,
        scene_index=scene_index,
        main_name=main_name.strip(),
        partner_name=partner_name.strip(),
        background=headers["background"],
        emotion=headers["emotion"],
        topic=headers["conversation topic"],
        turns=turns,
    )


def render_script(script: DialogueScript) -> str:
    """Canonical text form; parse_script round-trips it exactly."""
    parts = [
        f"Background:\n{script.background}",
        f"Emotion: {script.emotion}",
        f"Conversation topic: {script.topic}",
    ]
    body = []
    for t in script.turns:
        first, *rest = t.text.split("\n")
        lines = [f"{t.speaker} ({t.action}): {first}"] + rest
        body.append("\n".join(lines))
    return "\n".join(parts) + "\n\n" + "\n\n".join(body)


def script_violations(script: DialogueScript, catalog: AspectCatalog | None = None) -> list[str]:
    """Structural checks a finished script must pass."""
    out = []
    names = {script.main_name, script.partner_name}
    spoke = {name: False for name in names}
    for i, t in enumerate(script.turns, 1):
        if t.speaker not in names:
            out.append(f"turn {i}: unknown speaker {t.speaker!r}")
            continue
        if t.action not in ACTIONS:
            out.append(f"turn {i}: bad action {t.action!r}")
        if t.speaker == script.partner_name and t.action == "thinking":
            out.append(f"turn {i}: partner may not think")
        if not t.text.strip():
            out.append(f"turn {i}: empty text")
        if any(not ln.strip() for ln in t.text.split("\n")):
            out.append(f"turn {i}: blank line inside turn text")
        if t.action == "speaking":
            spoke[t.speaker] = True
    for name, did in spoke.items():
        if not did:
            out.append(f"{name} never speaks")
    if not script.turns:
        out.append("script has no turns")
    if catalog is not None:
        if not catalog.contains("emotions", script.emotion):
            out.append(f"emotion not in catalog: {script.emotion!r}")
        if not catalog.contains("topics", script.topic):
            out.append(f"topic not in catalog: {script.topic!r}")
    return out


# ---------------------------------------------------------------------------
# generation

_RETRY_NOTE = (
    "\n\nReminder: follow the example format exactly. Start with `Background:`,"
    " then `Emotion:`, then `Conversation topic:`. Write every turn as"
    " `{main} (speaking)`, `{main} (thinking)` or `{partner} (speaking)`,"
    " with the words on the lines that follow. Only {main} may think;"
    " {partner} only speaks. Leave a blank line between turns."
)


class _InvalidScript(ParseError):
    pass


def generate_dialogue(
    main: CharacterRecord,
    partner: CharacterRecord,
    scene: Scene,
    emotion: str,
    topic: str,
    provider: Provider,
    catalog: AspectCatalog,
    model: str = "",
) -> tuple[DialogueScript, str]:
    """Generate one script; returns (script, raw reply text).

    A reply that fails parsing or the structural checks triggers exactly
    one retry with a format reminder appended to the prompt.
    """
    prompt = build_dialogue_prompt(main, partner, scene, emotion, topic, catalog)
    emotion = catalog.canonical("emotions", emotion)
    topic = catalog.canonical("topics", topic)

    def attempt(text_prompt: str) -> tuple[DialogueScript, str]:
        reply = provider.chat(ChatRequest(user=text_prompt, model=model, tag="dialogue"))
        script = parse_script(
            reply.text,
            main_name=main.profile.name,
            partner_name=partner.profile.name,
            character_id=main.id,
            partner_id=partner.id,
            scene_index=scene.index,
        )
        # the requested steering wins over whatever the reply echoed
        script.emotion = emotion
        script.topic = topic
        problems = script_violations(script, catalog)
        if problems:
            raise _InvalidScript("; ".join(problems))
        words = sum(len(t.text.split()) for t in script.turns)
        if words < TARGET_SCRIPT_WORDS:
            log.warning("script %s/%s came in short: %d words",
                        main.id, scene.index, words)
        return script, reply.text

    try:
        return attempt(prompt)
    except ParseError as first:
        note = _RETRY_NOTE.replace("{main}", main.profile.name)
        note = note.replace("{partner}", partner.profile.name)
        try:
            return attempt(prompt + note)
        except ParseError as second:
            raise UnparseableAfterRetry(f"first: {first}; retry: {second}") from None


# ---------------------------------------------------------------------------
# quality control

@dataclass(frozen=True)
class ReviewVerdict:
    script_ref: str
    emotion_ok: bool
    topic_ok: bool
    reviewer: str = ""
    note: str = ""

    @property
    def aligned(self) -> bool:
        return self.emotion_ok and self.topic_ok

    def to_dict(self) -> dict:
        return {
            "script_ref": self.script_ref,
            "emotion_ok": self.emotion_ok,
            "topic_ok": self.topic_ok,
            "reviewer": self.reviewer,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReviewVerdict":
        return cls(
            script_ref=str(d["script_ref"]),
            emotion_ok=bool(d["emotion_ok"]),
            topic_ok=bool(d["topic_ok"]),
            reviewer=str(d.get("reviewer", "")),
            note=str(d.get("note", "")),
        )


@dataclass
class QcLedger:
    sampled_refs: list[str]
    reviewed: int
    aligned_count: int
    alignment_rate: float | None
    failed_refs: list[str]

    def to_dict(self) -> dict:
        return {
            "sampled_refs": list(self.sampled_refs),
            "reviewed": self.reviewed,
            "aligned_count": self.aligned_count,
            "alignment_rate": self.alignment_rate,
            "failed_refs": list(self.failed_refs),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QcLedger":
        return cls(
            sampled_refs=[str(x) for x in d.get("sampled_refs", [])],
            reviewed=int(d["reviewed"]),
            aligned_count=int(d["aligned_count"]),
            alignment_rate=d["alignment_rate"],
            failed_refs=[str(x) for x in d.get("failed_refs", [])],
        )


def qc_sample(
    scripts: list[DialogueScript],
    rho: float = DEFAULT_QC_RHO,
    seed: int | str = 0,
) -> list[DialogueScript]:
    """Seeded review sample of ceil(rho * n) scripts, without replacement."""
    if not 0 < rho <= 1:
        raise ValueError(f"rho must be in (0, 1], got {rho}")
    k = math.ceil(rho * len(scripts))
    rng = random.Random(f"qc:{seed}")
    return rng.sample(scripts, k) if scripts else []


def apply_reviews(
    scripts: list[DialogueScript],
    verdicts: list[ReviewVerdict],
    sampled_refs: list[str] | None = None,
) -> QcLedger:
    """Fold human verdicts into an alignment ledger and a redo queue.

    Verdicts must reference scripts in the review sample (or, when no
    sample is given, any known script).
    """
    valid_refs = set(sampled_refs) if sampled_refs else {s.ref for s in scripts}
    seen: dict[str, ReviewVerdict] = {}
    for v in verdicts:
        if v.script_ref not in valid_refs:
            raise UnknownScriptRef(v.script_ref)
        seen[v.script_ref] = v  # the latest verdict for a ref wins

    reviewed = len(seen)
    aligned = sum(1 for v in seen.values() if v.aligned)
    failed = sorted(ref for ref, v in seen.items() if not v.aligned)
    return QcLedger(
        sampled_refs=list(sampled_refs or []),
        reviewed=reviewed,
        aligned_count=aligned,
        alignment_rate=(aligned / reviewed) if reviewed else None,
        failed_refs=failed,
    )
