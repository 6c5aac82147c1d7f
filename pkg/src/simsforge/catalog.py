"""Aspect catalog: the closed vocabulary every other stage draws from.

The catalog file is plain JSON with one list per aspect kind plus an
optional label->description map. Loading keeps file order (sampling and
prompt text depend on it) while membership checks are case-insensitive.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import (
    CountMismatch,
    DuplicateLabel,
    FileMissing,
    InvalidLabel,
    MalformedCatalog,
)

# Aspect kinds, in the order they appear in the catalog file.
KINDS = ("careers", "aspirations", "traits", "skills", "emotions", "topics")

# Reference sizes of the shipped catalog; enforced only under strict=True.
EXPECTED_COUNTS = {
    "careers": 26,
    "aspirations": 10,
    "traits": 39,
    "skills": 41,
    "emotions": 16,
    "topics": 18,
}

SCENE_TYPES = ("chat", "debate", "discussion", "speech")

# Default selection arity for a sampled character spec.
DEFAULT_TRAIT_COUNT = 3
DEFAULT_SKILL_COUNT = 1


def _norm(label: str) -> str:
    return label.strip().casefold()


@dataclass(frozen=True)
class AspectCatalog:
    careers: tuple[str, ...]
    aspirations: tuple[str, ...]
    traits: tuple[str, ...]
    skills: tuple[str, ...]
    emotions: tuple[str, ...]
    topics: tuple[str, ...]
    scene_types: tuple[str, ...] = SCENE_TYPES
    descriptions: dict[str, str] = field(default_factory=dict)

    def kind(self, name: str) -> tuple[str, ...]:
        if name not in KINDS:
            raise KeyError(name)
        return getattr(self, name)

    def contains(self, kind: str, label: str) -> bool:
        return _norm(label) in {_norm(x) for x in self.kind(kind)}

    def canonical(self, kind: str, label: str) -> str:
        """Return the catalog spelling for a case-insensitive match."""
        want = _norm(label)
        for x in self.kind(kind):
            if _norm(x) == want:
                return x
        raise InvalidLabel(kind, label, suggestion=self.suggest(kind, label))

    def suggest(self, kind: str, label: str) -> str | None:
        """Nearest catalog label by edit distance, if reasonably close."""
        best, dist = None, 10 ** 9
        for x in self.kind(kind):
            d = _edit_distance(_norm(label), _norm(x))
            if d < dist:
                best, dist = x, d
        if best is not None and dist <= max(2, len(label) // 3):
            return best
        return None

    def description(self, label: str) -> str | None:
        return self.descriptions.get(label)

    def to_dict(self) -> dict:
        out: dict = {k: list(self.kind(k)) for k in KINDS}
        out["scene_types"] = list(self.scene_types)
        out["descriptions"] = dict(self.descriptions)
        return out


def _edit_distance(a: str, b: str) -> int:
    # classic two-row Levenshtein
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def default_catalog_path() -> Path:
    """Path of the catalog shipped inside the package."""
    return Path(str(resources.files("simsforge").joinpath("data/catalog.json")))


def loads_catalog(text: str, strict: bool = False) -> AspectCatalog:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedCatalog(f"not valid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise MalformedCatalog("top level must be an object")

    lists: dict[str, tuple[str, ...]] = {}
    for kind in KINDS:
        values = raw.get(kind)
        if not isinstance(values, list) or not values:
            raise MalformedCatalog(f"{kind} must be a non-empty list")
        seen: set[str] = set()
        for v in values:
            if not isinstance(v, str) or not v.strip():
                raise MalformedCatalog(f"{kind} entries must be non-empty strings")
            key = _norm(v)
            if key in seen:
                raise DuplicateLabel(kind, v)
            seen.add(key)
        lists[kind] = tuple(v.strip() for v in values)
        if strict and len(values) != EXPECTED_COUNTS[kind]:
            raise CountMismatch(
                f"{kind}: expected {EXPECTED_COUNTS[kind]}, found {len(values)}"
            )

    scene_types = tuple(raw.get("scene_types", SCENE_TYPES))
    if sorted(_norm(t) for t in scene_types) != sorted(SCENE_TYPES):
        raise MalformedCatalog("scene_types must be exactly chat/debate/discussion/speech")

    descriptions = raw.get("descriptions", {})
    if not isinstance(descriptions, dict):
        raise MalformedCatalog("descriptions must be an object")

    return AspectCatalog(
        careers=lists["careers"],
        aspirations=lists["aspirations"],
        traits=lists["traits"],
        skills=lists["skills"],
        emotions=lists["emotions"],
        topics=lists["topics"],
        scene_types=tuple(_norm(t) for t in scene_types),
        descriptions={str(k): str(v) for k, v in descriptions.items()},
    )


def load_catalog(path: str | Path | None = None, strict: bool = False) -> AspectCatalog:
    p = Path(path) if path is not None else default_catalog_path()
    if not p.exists():
        raise FileMissing(f"catalog file not found: {p}")
    return loads_catalog(p.read_text(encoding="utf-8"), strict=strict)


def save_catalog(catalog: AspectCatalog, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(catalog.to_dict(), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


# ---------------------------------------------------------------------------
# character specs

@dataclass(frozen=True)
class CharacterSpec:
    """A requested character: one career, one aspiration, traits and skills."""

    career: str
    aspiration: str
    traits: tuple[str, ...]
    skills: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "career": self.career,
            "aspiration": self.aspiration,
            "traits": list(self.traits),
            "skills": list(self.skills),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CharacterSpec":
        return cls(
            career=str(d["career"]),
            aspiration=str(d["aspiration"]),
            traits=tuple(d.get("traits", ())),
            skills=tuple(d.get("skills", ())),
        )


def validate_spec(catalog: AspectCatalog, spec: CharacterSpec) -> list[str]:
    """Return a list of violations; an empty list means the spec is valid."""
    out: list[str] = []

    def check(kind: str, label: str) -> None:
        if not catalog.contains(kind, label):
            hint = catalog.suggest(kind, label)
            msg = f"unknown {kind.rstrip('s')}: {label!r}"
            if hint:
                msg += f" (did you mean {hint!r}?)"
            out.append(msg)

    check("careers", spec.career)
    check("aspirations", spec.aspiration)
    if not 1 <= len(spec.traits) <= 3:
        out.append("traits: need 1-3")
    if not 1 <= len(spec.skills) <= 3:
        out.append("skills: need 1-3")
    for t in spec.traits:
        check("traits", t)
    for s in spec.skills:
        check("skills", s)
    for kind, labels in (("trait", spec.traits), ("skill", spec.skills)):
        seen: set[str] = set()
        for x in labels:
            if _norm(x) in seen:
                out.append(f"duplicate {kind}: {x!r}")
            seen.add(_norm(x))
    return out


def require_valid_spec(catalog: AspectCatalog, spec: CharacterSpec) -> None:
    violations = validate_spec(catalog, spec)
    if violations:
        from .errors import InvalidSpec

        raise InvalidSpec(violations)


def sample_spec(
    catalog: AspectCatalog,
    seed: int | str,
    n_traits: int = DEFAULT_TRAIT_COUNT,
    n_skills: int = DEFAULT_SKILL_COUNT,
) -> CharacterSpec:
    """Draw a uniform random spec from the catalog, deterministic per seed."""
    rng = random.Random(f"spec:{seed}")
    return CharacterSpec(
        career=rng.choice(catalog.careers),
        aspiration=rng.choice(catalog.aspirations),
        traits=tuple(rng.sample(catalog.traits, n_traits)),
        skills=tuple(rng.sample(catalog.skills, n_skills)),
    )
