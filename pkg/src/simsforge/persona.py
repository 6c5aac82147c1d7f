"""Character forging: prompt building, profile parsing, alignment checks.

A character starts as a catalog-constrained spec, becomes an eleven-field
profile via the provider, gets verified against the requested aspects,
and ends as a stored record with a second-person summary that downstream
prompts reuse.
"""

from __future__ import annotations

import datetime as dt
import json
import re
from dataclasses import dataclass, field
from importlib import resources

from .catalog import AspectCatalog, CharacterSpec, require_valid_spec
from .errors import (
    AgeOutOfRange,
    BadGender,
    ExhaustedAttempts,
    MissingField,
    NoJsonFound,
    ParseError,
)
from .provider.base import ChatReply, ChatRequest, Provider

PROFILE_FIELDS = (
    "name", "gender", "age", "tone", "career", "personality",
    "advantages_and_disadvantages", "hobby", "family_relationship",
    "social_relationship", "living_conditions",
)

AGE_MIN, AGE_MAX = 12, 40
GENDERS = ("male", "female")

_TEXT_FIELDS = tuple(f for f in PROFILE_FIELDS if f not in ("age",))


def load_template(name: str) -> str:
    return resources.files("simsforge").joinpath(f"prompts/{name}.txt").read_text(encoding="utf-8")


def fill_template(template: str, slots: dict[str, str]) -> str:
    # plain token replacement; the templates contain literal braces that
    # str.format would choke on
    out = template
    for key, value in slots.items():
        out = out.replace("{" + key + "}", value)
    return out


@dataclass(frozen=True)
class CharacterProfile:
    name: str
    gender: str
    age: int
    tone: str
    career: str
    personality: str
    advantages_and_disadvantages: str
    hobby: str
    family_relationship: str
    social_relationship: str
    living_conditions: str

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in PROFILE_FIELDS}

    @classmethod
    def from_dict(cls, d: dict) -> "CharacterProfile":
        return cls(**{f: d[f] for f in PROFILE_FIELDS})


@dataclass
class AlignmentReport:
    aligned: bool
    failures: list[str] = field(default_factory=list)


@dataclass
class CharacterRecord:
    id: str
    spec: CharacterSpec
    profile: CharacterProfile
    summary: str
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "spec": self.spec.to_dict(),
            "profile": self.profile.to_dict(),
            "summary": self.summary,
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CharacterRecord":
        return cls(
            id=str(d["id"]),
            spec=CharacterSpec.from_dict(d["spec"]),
            profile=CharacterProfile.from_dict(d["profile"]),
            summary=str(d["summary"]),
            provenance=dict(d.get("provenance", {})),
        )


# ---------------------------------------------------------------------------
# prompt

def build_profile_prompt(spec: CharacterSpec, catalog: AspectCatalog) -> str:
    """Fill the character creation template from a validated spec.

    Description lines are kept only for aspects the catalog actually
    describes; with the shipped catalog (no descriptions) they are dropped.
    """
    require_valid_spec(catalog, spec)
    career = catalog.canonical("careers", spec.career)
    aspiration = catalog.canonical("aspirations", spec.aspiration)
    traits = [catalog.canonical("traits", t) for t in spec.traits]
    skills = [catalog.canonical("skills", s) for s in spec.skills]

    slots = {
        "career": career,
        "aspiration": aspiration,
        "traits": ", ".join(traits),
        "skills": ", ".join(skills),
    }
    described = {
        "career_description": catalog.description(career),
        "aspiration_description": catalog.description(aspiration),
        "trait_descriptions": "; ".join(
            d for d in (catalog.description(t) for t in traits) if d
        ) or None,
    }

    lines = []
    for line in fill_template(load_template("character"), slots).splitlines():
        dropped = False
        for slot, value in described.items():
            token = "{" + slot + "}"
            if token in line:
                if value is None:
                    dropped = True
                else:
                    line = line.replace(token, value)
        if not dropped:
            lines.append(line)
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# parsing

def _first_json_object(raw: str) -> dict:
    decoder = json.JSONDecoder()
    for match in re.finditer(r"\{", raw):
        try:
            obj, _ = decoder.raw_decode(raw, match.start())
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    raise NoJsonFound("reply contains no JSON object")


def parse_profile(raw: str) -> CharacterProfile:
    """Extract the profile JSON from a reply, tolerating surrounding prose."""
    obj = _first_json_object(raw)

    values: dict = {}
    for name in PROFILE_FIELDS:
        if name not in obj:
            raise MissingField(name)
        values[name] = obj[name]

    age = values["age"]
    if isinstance(age, str):
        age = age.strip()
        if not re.fullmatch(r"\d+", age):
            raise AgeOutOfRange(values["age"])
        age = int(age)
    if not isinstance(age, int) or isinstance(age, bool) or not (AGE_MIN <= age <= AGE_MAX):
        raise AgeOutOfRange(values["age"])
    values["age"] = age

    gender = str(values["gender"]).strip().lower()
    if gender not in GENDERS:
        raise BadGender(values["gender"])
    values["gender"] = gender

    for name in _TEXT_FIELDS:
        if name == "gender":
            continue
        text = str(values[name]).strip()
        if not text:
            raise MissingField(name)
        values[name] = text

    return CharacterProfile.from_dict(values)


# ---------------------------------------------------------------------------
# alignment

def verify_profile(spec: CharacterSpec, profile: CharacterProfile) -> AlignmentReport:
    """Check that the profile actually reflects the requested aspects."""
    failures: list[str] = []

    def has(haystack: str, needle: str) -> bool:
        return needle.casefold() in haystack.casefold()

    if not has(profile.career, spec.career):
        failures.append(f"career does not mention {spec.career!r}")
    for trait in spec.traits:
        if not has(profile.personality, trait):
            failures.append(f"personality does not mention trait {trait!r}")
    if spec.skills and not any(has(profile.hobby, s) for s in spec.skills):
        failures.append("hobby mentions none of the requested skills")
    if not (AGE_MIN <= profile.age <= AGE_MAX):
        failures.append(f"age outside {AGE_MIN}..{AGE_MAX}: {profile.age}")
    if profile.gender not in GENDERS:
        failures.append(f"gender invalid: {profile.gender!r}")
    return AlignmentReport(aligned=not failures, failures=failures)


# ---------------------------------------------------------------------------
# summary

def _sentence(text: str) -> str:
    text = text.strip()
    return text if text.endswith((".", "!", "?")) else text + "."


def render_persona_summary(profile: CharacterProfile) -> str:
    """Deterministic second-person summary quoting every profile field."""
    p = profile
    lines = [
        f"You are {p.name}, a {p.age}-year-old {p.gender} {_sentence(p.career)}",
        f"Your tone: {_sentence(p.tone)}",
        f"Your personality: {_sentence(p.personality)}",
        f"Your advantages and disadvantages: {_sentence(p.advantages_and_disadvantages)}",
        f"Your hobby: {_sentence(p.hobby)}",
        f"Your family relationship: {_sentence(p.family_relationship)}",
        f"Your social relationship: {_sentence(p.social_relationship)}",
        f"Your living conditions: {_sentence(p.living_conditions)}",
    ]
    return "\n".join(lines)


def _summary_from_reply(raw: str, profile: CharacterProfile) -> str | None:
    """Pick up the model's own second-person rewrite when it offered one."""
    marker = f"You are {profile.name}"
    at = raw.rfind(marker)
    if at == -1:
        return None
    tail = raw[at:].strip()
    # drop trailing code fences or stray braces the model may close with
    tail = re.sub(r"\s*(```|\})\s*$", "", tail).strip()
    # only trust it if it reads like a complete rewrite
    if len(tail) < 40:
        return None
    return tail


# ---------------------------------------------------------------------------
# forging

def slugify(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    return slug or "character"


def forge_character(
    spec: CharacterSpec,
    provider: Provider,
    catalog: AspectCatalog,
    max_attempts: int = 3,
    model: str = "",
    character_id: str | None = None,
    now=None,
) -> CharacterRecord:
    """Generate, parse and verify a profile, retrying until it aligns."""
    prompt = build_profile_prompt(spec, catalog)
    last_failures: list[str] = []
    for attempt in range(1, max_attempts + 1):
        reply: ChatReply = provider.chat(
            ChatRequest(user=prompt, model=model, tag="character")
        )
        try:
            profile = parse_profile(reply.text)
        except ParseError as e:
            last_failures = [f"unparseable reply: {e}"]
            continue
        report = verify_profile(spec, profile)
        if not report.aligned:
            last_failures = report.failures
            continue
        summary = _summary_from_reply(reply.text, profile) or render_persona_summary(profile)
        timestamp = (now() if now else dt.datetime.now(dt.timezone.utc)).isoformat()
        return CharacterRecord(
            id=character_id or slugify(profile.name),
            spec=spec,
            profile=profile,
            summary=summary,
            provenance={
                "model": model or "mock",
                "temperature": 0.8,
                "created_at": timestamp,
                "attempt": attempt,
            },
        )
    raise ExhaustedAttempts(max_attempts, last_failures)
