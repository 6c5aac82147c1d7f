"""Scene construction: 20 grounding scenes per character by default."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import (
    MissingKey,
    NoScenesFound,
    ShortfallAfterRetry,
    UnknownSceneType,
)
from .persona import CharacterRecord, fill_template, load_template
from .provider.base import ChatRequest, Provider

DEFAULT_SCENE_COUNT = 20

# singular canonical form for each accepted spelling
_TYPE_ALIASES = {
    "chat": "chat", "chats": "chat",
    "debate": "debate", "debates": "debate",
    "discussion": "discussion", "discussions": "discussion",
    "speech": "speech", "speeches": "speech",
}


def normalize_scene_type(value: str) -> str:
    # tolerate the template's "Chat (choice in chat, debate, ...)" echo
    token = re.sub(r"\(.*?\)", "", value).strip().lower()
    if token in _TYPE_ALIASES:
        return _TYPE_ALIASES[token]
    raise UnknownSceneType(value)


@dataclass(frozen=True)
class Scene:
    character_id: str
    index: int
    scene_type: str
    location: str
    background: str

    def to_dict(self) -> dict:
        return {
            "character_id": self.character_id,
            "index": self.index,
            "scene_type": self.scene_type,
            "location": self.location,
            "background": self.background,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scene":
        return cls(
            character_id=str(d["character_id"]),
            index=int(d["index"]),
            scene_type=str(d["scene_type"]),
            location=str(d["location"]),
            background=str(d["background"]),
        )


def scene_violations(scene: Scene) -> list[str]:
    out = []
    if scene.scene_type not in ("chat", "debate", "discussion", "speech"):
        out.append(f"scene type: {scene.scene_type!r}")
    if not scene.location.strip():
        out.append("location empty")
    if not scene.background.strip():
        out.append("background empty")
    if "(speaking)" in scene.background or "(thinking)" in scene.background:
        out.append("background contains dialogue markup")
    if scene.index < 1:
        out.append(f"index must be positive, got {scene.index}")
    return out


def build_scene_prompt(character_summary: str, n: int = DEFAULT_SCENE_COUNT) -> str:
    return fill_template(
        load_template("scene"),
        {"character_summary": character_summary, "n": str(n)},
    )


_SCENE_HEADER = re.compile(r"^\s*Scene\s+(\d+)\s*:\s*$", re.IGNORECASE | re.MULTILINE)
_KEY_LINE = re.compile(r"^(Type|Location|Background)\s*:\s*(.*)$", re.IGNORECASE)


def parse_scenes(raw: str, character_id: str = "") -> list[Scene]:
    """Read `Scene k:` blocks; keys may come in any order inside a block."""
    headers = list(_SCENE_HEADER.finditer(raw))
    if not headers:
        raise NoScenesFound("no `Scene <k>:` headers in reply")

    scenes: list[Scene] = []
    for pos, m in enumerate(headers):
        end = headers[pos + 1].start() if pos + 1 < len(headers) else len(raw)
        index = int(m.group(1))
        block = raw[m.end():end]

        fields: dict[str, list[str]] = {}
        current: str | None = None
        for line in block.splitlines():
            km = _KEY_LINE.match(line.strip())
            if km:
                current = km.group(1).lower()
                fields[current] = [km.group(2)]
            elif current and line.strip():
                fields[current].append(line.rstrip())
        for key in ("type", "location", "background"):
            if key not in fields or not "\n".join(fields[key]).strip():
                raise MissingKey(index, key)

        scenes.append(Scene(
            character_id=character_id,
            index=index,
            scene_type=normalize_scene_type(fields["type"][0]),
            location=" ".join(x.strip() for x in fields["location"]).strip(),
            background="\n".join(fields["background"]).strip(),
        ))
    return scenes


def render_scenes(scenes: list[Scene]) -> str:
    """Canonical text form; parse_scenes(render_scenes(s)) round-trips."""
    blocks = []
    for s in scenes:
        blocks.append(
            f"Scene {s.index}:\n"
            f"Type: {s.scene_type.capitalize()}\n"
            f"Location: {s.location}\n"
            f"Background: {s.background}"
        )
    return "\n\n".join(blocks)


def generate_scenes(
    record: CharacterRecord,
    provider: Provider,
    n: int = DEFAULT_SCENE_COUNT,
    model: str = "",
) -> list[Scene]:
    """Ask for n scenes; top up once if the reply came in short."""
    def ask(count: int) -> list[Scene]:
        reply = provider.chat(ChatRequest(
            user=build_scene_prompt(record.summary, count),
            model=model,
            tag="scene",
        ))
        try:
            parsed = parse_scenes(reply.text, character_id=record.id)
        except NoScenesFound:
            return []
        return [s for s in parsed if not scene_violations(s)]

    scenes = ask(n)
    if len(scenes) < n:
        scenes = scenes + ask(n - len(scenes))
    if len(scenes) < n:
        raise ShortfallAfterRetry(len(scenes), n)

    # renumber sequentially so indexes are stable regardless of reply numbering
    return [
        Scene(
            character_id=record.id,
            index=i,
            scene_type=s.scene_type,
            location=s.location,
            background=s.background,
        )
        for i, s in enumerate(scenes[:n], 1)
    ]
