"""Exception hierarchy shared across the package.

Everything raised on purpose derives from SimsForgeError so callers can
catch one base class at a process boundary (CLI, HTTP service).
"""

from __future__ import annotations


class SimsForgeError(Exception):
    """Base class for all deliberate errors."""


# ---------------------------------------------------------------------------
# catalog

class FileMissing(SimsForgeError):
    pass


class MalformedCatalog(SimsForgeError):
    pass


class DuplicateLabel(SimsForgeError):
    def __init__(self, kind: str, label: str):
        super().__init__(f"duplicate {kind.rstrip('s')} label: {label!r}")
        self.kind = kind
        self.label = label


class CountMismatch(SimsForgeError):
    pass


class InvalidSpec(SimsForgeError):
    """A character spec failed catalog validation."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class InvalidLabel(SimsForgeError):
    def __init__(self, kind: str, label: str, suggestion: str | None = None):
        hint = f" (did you mean {suggestion!r}?)" if suggestion else ""
        super().__init__(f"unknown {kind}: {label!r}{hint}")
        self.kind = kind
        self.label = label
        self.suggestion = suggestion


# ---------------------------------------------------------------------------
# parsing of model replies

class ParseError(SimsForgeError):
    """A model reply could not be read into the expected structure."""


class NoJsonFound(ParseError):
    pass


class MissingField(ParseError):
    def __init__(self, name: str):
        super().__init__(f"profile field missing or empty: {name}")
        self.name = name


class AgeOutOfRange(ParseError):
    def __init__(self, value):
        super().__init__(f"age outside 12..40: {value!r}")
        self.value = value


class BadGender(ParseError):
    def __init__(self, value):
        super().__init__(f"gender must be male or female, got {value!r}")
        self.value = value


class NoScenesFound(ParseError):
    pass


class MissingKey(ParseError):
    def __init__(self, scene_index: int, key: str):
        super().__init__(f"scene {scene_index} is missing {key!r}")
        self.scene_index = scene_index
        self.key = key


class UnknownSceneType(ParseError):
    def __init__(self, value: str):
        super().__init__(f"unknown scene type: {value!r}")
        self.value = value


class MissingHeader(ParseError):
    def __init__(self, header: str):
        super().__init__(f"script is missing the {header!r} header")
        self.header = header


class UnknownSpeaker(ParseError):
    def __init__(self, name: str):
        super().__init__(f"turn attributed to unknown speaker: {name!r}")
        self.name = name


class BadAction(ParseError):
    def __init__(self, action: str):
        super().__init__(f"turn action must be speaking or thinking, got {action!r}")
        self.action = action


class EmptyScript(ParseError):
    pass


class NoScoreFound(ParseError):
    pass


class OutOfRange(ParseError):
    def __init__(self, value: int, lo: int, hi: int):
        super().__init__(f"score {value} outside {lo}..{hi}")
        self.value = value
        self.lo = lo
        self.hi = hi


# ---------------------------------------------------------------------------
# generation pipeline

class ExhaustedAttempts(SimsForgeError):
    """Profile generation kept failing alignment checks."""

    def __init__(self, attempts: int, last_failures: list[str]):
        detail = "; ".join(last_failures) or "no detail"
        super().__init__(f"gave up after {attempts} attempts: {detail}")
        self.attempts = attempts
        self.last_failures = last_failures


class ShortfallAfterRetry(SimsForgeError):
    def __init__(self, got: int, want: int):
        super().__init__(f"asked for {want}, got {got} even after a retry")
        self.got = got
        self.want = want


class UnparseableAfterRetry(SimsForgeError):
    def __init__(self, detail: str):
        super().__init__(f"script invalid after retry: {detail}")
        self.detail = detail


# ---------------------------------------------------------------------------
# provider

class ProviderError(SimsForgeError):
    """Base for transport-level chat completion failures."""


class AuthError(ProviderError):
    pass


class RateLimited(ProviderError):
    pass


class TransportError(ProviderError):
    pass


class ExhaustedRetries(ProviderError):
    def __init__(self, attempts: int, last: Exception):
        super().__init__(f"still failing after {attempts} attempts: {last}")
        self.attempts = attempts
        self.last = last


class FixtureMissing(ProviderError):
    def __init__(self, tag: str, digest: str):
        super().__init__(f"no fixture for tag={tag} hash={digest}")
        self.tag = tag
        self.digest = digest


# ---------------------------------------------------------------------------
# evaluation

class UnknownDimension(SimsForgeError):
    def __init__(self, name: str):
        super().__init__(f"unknown interview dimension: {name!r}")
        self.name = name


class EmptyDimension(SimsForgeError):
    def __init__(self, name: str):
        super().__init__(f"no scores collected for dimension: {name}")
        self.name = name


class LengthMismatch(SimsForgeError):
    pass


class EmptyInput(SimsForgeError):
    pass


class MalformedJudgeReply(SimsForgeError):
    pass


class UnknownScriptRef(SimsForgeError):
    def __init__(self, ref: str):
        super().__init__(f"verdict references unknown script: {ref}")
        self.ref = ref


# ---------------------------------------------------------------------------
# dataset export

class BudgetTooSmall(SimsForgeError):
    def __init__(self, ref: str, budget: int):
        super().__init__(f"{ref}: cannot fit even one turn under budget {budget}")
        self.ref = ref
        self.budget = budget


class EmptyCorpus(SimsForgeError):
    pass


# ---------------------------------------------------------------------------
# serving

class UnknownCharacter(SimsForgeError):
    def __init__(self, character_id: str):
        super().__init__(f"unknown character: {character_id}")
        self.character_id = character_id


class UnknownSession(SimsForgeError):
    def __init__(self, session_id: str):
        super().__init__(f"unknown session: {session_id}")
        self.session_id = session_id


class SessionBusy(SimsForgeError):
    def __init__(self, session_id: str):
        super().__init__(f"session {session_id} is already handling a message")
        self.session_id = session_id
