"""Interview-based evaluation.

Covers question generation, judge prompting over five dimensions with a
1-7 Likert scale, score aggregation, the out-of-persona benchmark
(consistency / knowledge / rejection), and inter-rater agreement.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from statistics import mean

from .errors import (
    EmptyDimension,
    EmptyInput,
    LengthMismatch,
    MalformedJudgeReply,
    NoScoreFound,
    OutOfRange,
    ShortfallAfterRetry,
    UnknownDimension,
)
from .persona import CharacterRecord, fill_template, load_template
from .provider.base import ChatRequest, Provider

DIMENSIONS = ("memorisation", "values", "personality", "hallucination", "stability")

LIKERT_LO, LIKERT_HI = 1, 7
DEFAULT_QUESTION_COUNT = 50


@dataclass(frozen=True)
class InterviewQuestion:
    character_id: str
    index: int
    text: str

    def to_dict(self) -> dict:
        return {"character_id": self.character_id, "index": self.index, "text": self.text}

    @classmethod
    def from_dict(cls, d: dict) -> "InterviewQuestion":
        return cls(character_id=str(d["character_id"]), index=int(d["index"]), text=str(d["text"]))


# ---------------------------------------------------------------------------
# question generation

_NUMBERING = re.compile(r"^\s*(?:\d+\s*[.)]\s*|[-*•]\s*)")


def build_question_prompt(character_summary: str, n: int = DEFAULT_QUESTION_COUNT) -> str:
    return fill_template(
        load_template("interview"),
        {"character_summary": character_summary, "n": str(n)},
    )


def _question_lines(raw: str) -> list[str]:
    out = []
    for line in raw.splitlines():
        text = _NUMBERING.sub("", line).strip()
        if text:
            out.append(text)
    return out


def generate_questions(
    record: CharacterRecord,
    provider: Provider,
    n: int = DEFAULT_QUESTION_COUNT,
    model: str = "",
) -> list[InterviewQuestion]:
    """Ask for n distinct questions; deduplicates and tops up once."""
    def ask(count: int) -> list[str]:
        reply = provider.chat(ChatRequest(
            user=build_question_prompt(record.summary, count),
            model=model,
            tag="interview",
        ))
        return _question_lines(reply.text)

    texts: list[str] = []
    seen: set[str] = set()
    for text in ask(n):
        key = text.casefold()
        if key not in seen:
            seen.add(key)
            texts.append(text)
    if len(texts) < n:
        for text in ask(n - len(texts)):
            key = text.casefold()
            if key not in seen:
                seen.add(key)
                texts.append(text)
    if len(texts) < n:
        raise ShortfallAfterRetry(len(texts), n)
    return [
        InterviewQuestion(character_id=record.id, index=i, text=t)
        for i, t in enumerate(texts[:n], 1)
    ]


# ---------------------------------------------------------------------------
# judging

def build_judge_prompt(
    dimension: str,
    record: CharacterRecord,
    question: str,
    response: str,
) -> str:
    if dimension not in DIMENSIONS:
        raise UnknownDimension(dimension)
    return fill_template(load_template(f"judge_{dimension}"), {
        "agent_name": record.profile.name,
        "character_summary": record.summary,
        "question": question,
        "response": response,
    })


def parse_likert(raw: str, lo: int = LIKERT_LO, hi: int = LIKERT_HI) -> int:
    """Read the first integer token of a judge reply as the score."""
    m = re.search(r"\d+", raw)
    if not m:
        raise NoScoreFound(f"no integer in judge reply: {raw[:80]!r}")
    value = int(m.group(0))
    if not (lo <= value <= hi):
        raise OutOfRange(value, lo, hi)
    return value


@dataclass(frozen=True)
class DimensionScore:
    dimension: str
    score: int
    character_id: str = ""
    question_index: int = 0


@dataclass
class EvaluationReport:
    model_label: str
    means: dict[str, float]
    avg: float
    n_scores: int = 0

    def rounded(self) -> dict[str, float]:
        out = {d: round(self.means[d], 2) for d in DIMENSIONS}
        out["avg"] = round(self.avg, 2)
        return out

    def to_dict(self) -> dict:
        return {
            "model_label": self.model_label,
            "means": {d: self.means[d] for d in DIMENSIONS},
            "avg": self.avg,
            "n_scores": self.n_scores,
        }


def aggregate(scores: list[DimensionScore], model_label: str = "") -> EvaluationReport:
    """Per-dimension means at full precision; avg is the mean of the five."""
    groups: dict[str, list[int]] = {d: [] for d in DIMENSIONS}
    for s in scores:
        if s.dimension not in groups:
            raise UnknownDimension(s.dimension)
        groups[s.dimension].append(s.score)
    for d in DIMENSIONS:
        if not groups[d]:
            raise EmptyDimension(d)
    means = {d: mean(groups[d]) for d in DIMENSIONS}
    return EvaluationReport(
        model_label=model_label,
        means=means,
        avg=mean(means[d] for d in DIMENSIONS),
        n_scores=len(scores),
    )


def report_from_means(model_label: str, means: dict[str, float]) -> EvaluationReport:
    """Build a report from already-averaged dimension scores."""
    for d in DIMENSIONS:
        if d not in means:
            raise EmptyDimension(d)
    cleaned = {d: float(means[d]) for d in DIMENSIONS}
    return EvaluationReport(
        model_label=model_label,
        means=cleaned,
        avg=mean(cleaned[d] for d in DIMENSIONS),
    )


def render_report_table(reports: list[EvaluationReport]) -> str:
    headers = ["Model"] + [d.capitalize() for d in DIMENSIONS] + ["Avg"]
    rows = [headers]
    for r in reports:
        cells = r.rounded()
        rows.append([r.model_label] + [f"{cells[d]:.2f}" for d in DIMENSIONS] + [f"{cells['avg']:.2f}"])
    widths = [max(len(row[i]) for row in rows) for i in range(len(headers))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in rows]
    return "\n".join(lines)


def judge_response(
    dimension: str,
    record: CharacterRecord,
    question: str,
    response: str,
    provider: Provider,
    model: str = "",
) -> int:
    reply = provider.chat(ChatRequest(
        user=build_judge_prompt(dimension, record, question, response),
        model=model,
        tag="judge",
    ))
    return parse_likert(reply.text)


# ---------------------------------------------------------------------------
# out-of-persona benchmark

@dataclass(frozen=True)
class BenchmarkRecord:
    """One benchmark item: a question asked of a known figure.

    ``expect_rejection`` marks questions the character could not know the
    answer to, where a faithful agent should decline.
    """

    character: str
    question: str
    response: str
    candidates: tuple[str, ...]
    true_candidate: str
    expect_rejection: bool = False

    def __post_init__(self):
        if len(self.candidates) != 4:
            raise ValueError("exactly four candidates are required")
        if sum(1 for c in self.candidates if c == self.true_candidate) != 1:
            raise ValueError("the true candidate must appear exactly once")

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkRecord":
        return cls(
            character=str(d["character"]),
            question=str(d["question"]),
            response=str(d["response"]),
            candidates=tuple(d["candidates"]),
            true_candidate=str(d["true_candidate"]),
            expect_rejection=bool(d.get("expect_rejection", False)),
        )


@dataclass
class BenchmarkReport:
    consistency: float
    knowledge: float
    rejection: float | None
    n_records: int
    n_skipped: int

    def to_dict(self) -> dict:
        return {
            "consistency": self.consistency,
            "knowledge": self.knowledge,
            "rejection": self.rejection,
            "n_records": self.n_records,
            "n_skipped": self.n_skipped,
        }


_MCQ_TEMPLATE = """You are evaluating a role-play response for character consistency.

Question: {question}
Response: {response}

Which of the following candidates most likely wrote the response?
{options}

Answer with the single letter of the most suitable candidate."""

_KNOWLEDGE_TEMPLATE = """You are evaluating the character knowledge shown in a role-play response by {character}.

Question: {question}
Response: {response}

Rate how well the response demonstrates the knowledge {character} should have, on a scale of 1-10, with 1 being the worst. Reply with the score only."""

_REJECTION_TEMPLATE = """You are checking whether a role-play response declines to answer.

The character {character} could not know the answer to the question below. A faithful response politely declines, deflects, or expresses ignorance.

Question: {question}
Response: {response}

Does the response decline or express ignorance, staying inside what {character} could know? Answer YES or NO."""

_LETTERS = "ABCD"


def build_consistency_prompt(rec: BenchmarkRecord) -> str:
    options = "\n".join(f"{_LETTERS[i]}) {c}" for i, c in enumerate(rec.candidates))
    return _MCQ_TEMPLATE.format(question=rec.question, response=rec.response, options=options)


def build_knowledge_prompt(rec: BenchmarkRecord) -> str:
    return _KNOWLEDGE_TEMPLATE.format(
        character=rec.character, question=rec.question, response=rec.response
    )


def build_rejection_prompt(rec: BenchmarkRecord) -> str:
    return _REJECTION_TEMPLATE.format(
        character=rec.character, question=rec.question, response=rec.response
    )


def _parse_choice(raw: str) -> str:
    m = re.search(r"\b([A-Da-d])\b", raw)
    if not m:
        raise NoScoreFound(f"no candidate letter in reply: {raw[:80]!r}")
    return m.group(1).upper()


def _parse_yes_no(raw: str) -> bool:
    m = re.search(r"\b(yes|no)\b", raw, re.IGNORECASE)
    if not m:
        raise NoScoreFound(f"no yes/no verdict in reply: {raw[:80]!r}")
    return m.group(1).lower() == "yes"


MAX_SKIP_FRACTION = 0.10


def score_benchmark(
    records: list[BenchmarkRecord],
    provider: Provider,
    model: str = "",
) -> BenchmarkReport:
    """Judge every record on consistency, knowledge and (where flagged)
    rejection. Malformed judge replies are skipped and counted; more than
    10% of them fails the whole run."""
    if not records:
        raise EmptyInput("no benchmark records")

    def judge(prompt: str) -> str:
        return provider.chat(ChatRequest(user=prompt, model=model, tag="judge")).text

    total_calls = 0
    skipped = 0
    consistent: list[bool] = []
    knowledge: list[int] = []
    rejections: list[bool] = []

    for rec in records:
        total_calls += 1
        try:
            letter = _parse_choice(judge(build_consistency_prompt(rec)))
            picked = rec.candidates[_LETTERS.index(letter)]
            consistent.append(picked == rec.true_candidate)
        except NoScoreFound:
            skipped += 1

        total_calls += 1
        try:
            knowledge.append(parse_likert(judge(build_knowledge_prompt(rec)), 1, 10))
        except (NoScoreFound, OutOfRange):
            skipped += 1

        if rec.expect_rejection:
            total_calls += 1
            try:
                rejections.append(_parse_yes_no(judge(build_rejection_prompt(rec))))
            except NoScoreFound:
                skipped += 1

    if skipped > MAX_SKIP_FRACTION * total_calls:
        raise MalformedJudgeReply(f"{skipped}/{total_calls} judge replies unusable")
    if not consistent or not knowledge:
        raise MalformedJudgeReply("all judge replies unusable")

    report = BenchmarkReport(
        consistency=sum(consistent) / len(consistent),
        knowledge=mean(knowledge),
        rejection=(sum(rejections) / len(rejections)) if rejections else None,
        n_records=len(records),
        n_skipped=skipped,
    )
    assert 0.0 <= report.consistency <= 1.0
    assert 1.0 <= report.knowledge <= 10.0
    assert report.rejection is None or 0.0 <= report.rejection <= 1.0
    return report


# ---------------------------------------------------------------------------
# inter-rater agreement

def cohen_kappa(a: list, b: list) -> float:
    """Two-rater Cohen's kappa with marginal-frequency chance agreement."""
    if len(a) != len(b):
        raise LengthMismatch(f"rating lists differ in length: {len(a)} vs {len(b)}")
    if not a:
        raise EmptyInput("no ratings")
    n = len(a)
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    labels = set(a) | set(b)
    p_e = sum((a.count(k) / n) * (b.count(k) / n) for k in labels)
    if p_e == 1.0:
        # both raters constant on the same label: perfect trivial agreement
        return 1.0
    return (p_o - p_e) / (1 - p_e)


def kappa_from_ratings(rows: list[dict]) -> dict:
    """Pairwise kappa per dimension from long-form rating rows.

    Each row needs item, rater, dimension, score. Returns per-dimension
    mean pairwise kappa plus the overall mean.
    """
    if not rows:
        raise EmptyInput("no rating rows")
    by_dim: dict[str, dict[str, dict[str, object]]] = {}
    for row in rows:
        dim = str(row["dimension"])
        rater = str(row["rater"])
        by_dim.setdefault(dim, {}).setdefault(rater, {})[str(row["item"])] = row["score"]

    per_dimension: dict[str, float] = {}
    for dim, raters in sorted(by_dim.items()):
        names = sorted(raters)
        pair_values = []
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                shared = sorted(set(raters[names[i]]) & set(raters[names[j]]))
                if not shared:
                    continue
                pair_values.append(cohen_kappa(
                    [raters[names[i]][k] for k in shared],
                    [raters[names[j]][k] for k in shared],
                ))
        if pair_values:
            per_dimension[dim] = mean(pair_values)
    if not per_dimension:
        raise EmptyInput("no rater pair shares any item")
    return {
        "per_dimension": per_dimension,
        "overall": mean(per_dimension.values()),
    }
