"""Deterministic offline provider.

Reply resolution order: scripted replies pushed by tests, then fixture
files under ``{fixtures_dir}/{tag}/{digest}.txt``, then synthesized text
seeded by (seed, tag, prompt digest). Synthesis reads just enough of the
prompt to produce a reply the downstream parser accepts, so the whole
pipeline runs offline and reproducibly. ``strict=True`` disables
synthesis and demands a fixture.
"""

from __future__ import annotations

import json
import math
import random
import re
import threading
from collections import defaultdict, deque
from pathlib import Path

from ..errors import FixtureMissing
from .base import ChatReply, ChatRequest, prompt_digest

_FIRST_NAMES = (
    "Zephyr", "Luna", "Orion", "Mira", "Caspian", "Isolde", "Ronan", "Saffron",
    "Elara", "Dashiell", "Priya", "Matteo", "Ingrid", "Kofi", "Amaya", "Lorenzo",
    "Freya", "Tobias", "Anouk", "Rafael", "Sable", "Emrys", "Noor", "Viggo",
)

_LAST_NAMES = (
    "Orion", "Vale", "Ashford", "Delacroix", "Nakamura", "Sterling", "Moreau",
    "Castellan", "Lindqvist", "Okafor", "Marchetti", "Halloway", "Winterbourne",
    "Sorenson", "Villanueva", "Beaumont", "Quill", "Hartwell", "Ferrante",
    "Abernathy", "Calloway", "Ravenscroft", "Duarte", "Pemberton",
)

_LOCATIONS = (
    "a sunlit community hall", "the old harbour market", "a rooftop garden",
    "the city library annex", "a crowded train platform", "the riverside cafe",
    "a converted warehouse studio", "the town amphitheatre", "a quiet tea house",
    "the science museum foyer", "a neighbourhood gym", "the botanical archive",
    "a late-night radio booth", "the university courtyard", "a mountain lodge",
    "the festival green",
)

_SCENE_TYPES = ("Chat", "Debate", "Discussion", "Speech")

_QUESTION_STEMS = (
    "Talk about", "What do you remember about", "How do you feel about",
    "Describe", "What would you change about", "Who taught you about",
    "When did you first discover", "Why do you care about",
    "What surprises people about", "Share a story about",
)

_QUESTION_SUBJECTS = (
    "your hobby", "your family", "your earliest ambition", "your daily routine",
    "your closest friend", "your biggest setback", "your work", "your hometown",
    "the person you admire most", "your plans for the future", "your fears",
    "the way you speak",
)

_CHAT_OPENERS = (
    "Honestly,", "You know,", "Well,", "Listen,", "Between us,", "Truth be told,",
)

_CHAT_BODIES = (
    "that reminds me of something from my line of work",
    "I have been turning that over in my head all day",
    "I would rather talk this through than let it fester",
    "there is more to that story than people assume",
    "I have strong opinions about this, as you can tell",
    "let me put it the way I usually do",
)


def _grab(pattern: str, text: str) -> str | None:
    m = re.search(pattern, text, re.MULTILINE)
    return m.group(1).strip() if m else None


class MockProvider:
    def __init__(self, seed: int = 0, fixtures_dir: str | Path | None = None,
                 strict: bool = False):
        self.seed = seed
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir else None
        self.strict = strict
        self.requests: list[ChatRequest] = []
        self._scripted: dict[str, deque[str]] = defaultdict(deque)
        self._lock = threading.Lock()

    # -- test hooks --------------------------------------------------------

    def push(self, tag: str, *texts: str) -> None:
        """Queue canned replies for a tag, consumed FIFO before anything else."""
        with self._lock:
            self._scripted[tag].extend(texts)

    def reset_capture(self) -> None:
        with self._lock:
            self.requests.clear()

    # -- provider protocol --------------------------------------------------

    def chat(self, request: ChatRequest) -> ChatReply:
        with self._lock:
            self.requests.append(request)
            queue = self._scripted.get(request.tag)
            scripted = queue.popleft() if queue else None
        if scripted is not None:
            return self._reply(request, scripted)

        digest = prompt_digest(request)
        if self.fixtures_dir is not None:
            path = self.fixtures_dir / request.tag / f"{digest}.txt"
            if path.exists():
                return self._reply(request, path.read_text(encoding="utf-8"))
        if self.strict:
            raise FixtureMissing(request.tag, digest)
        return self._reply(request, self._synthesize(request, digest))

    def _reply(self, request: ChatRequest, text: str) -> ChatReply:
        usage = {
            "prompt_tokens": math.ceil(len((request.system or "") + request.user) / 4),
            "completion_tokens": math.ceil(len(text) / 4),
        }
        return ChatReply(text=text, usage=usage, latency=0.0)

    # -- synthesis ----------------------------------------------------------

    def _synthesize(self, request: ChatRequest, digest: str) -> str:
        rng = random.Random(f"{self.seed}:{request.tag}:{digest}")
        if request.system is not None:
            return self._synth_chat(request, rng)
        if request.tag == "character":
            return self._synth_character(request.user, rng)
        if request.tag == "scene":
            return self._synth_scenes(request.user, rng)
        if request.tag == "dialogue":
            return self._synth_dialogue(request.user, rng)
        if request.tag == "interview":
            return self._synth_questions(request.user, rng)
        return self._synth_judgement(request.user, rng)

    def _synth_chat(self, request: ChatRequest, rng: random.Random) -> str:
        # an in-character serving reply; content does not matter, shape does
        name = _grab(r"You are ([^,]+),", request.system or "") or "the character"
        opener = rng.choice(_CHAT_OPENERS)
        body = rng.choice(_CHAT_BODIES)
        return f"{opener} {body}. Speaking as {name}, that is how I see it."

    def _synth_character(self, prompt: str, rng: random.Random) -> str:
        career = _grab(r"^career: (.+)$", prompt) or "Freelancer"
        aspiration = _grab(r"^aspiration: (.+)$", prompt) or "Knowledge"
        traits_line = _grab(r"^trait: (.+)$", prompt) or "Cheerful"
        skills_line = _grab(r"^skill: (.+)$", prompt) or "Cooking"
        traits = [t.strip() for t in traits_line.split(",") if t.strip()]
        skills = [s.strip() for s in skills_line.split(",") if s.strip()]

        name = f"{rng.choice(_FIRST_NAMES)} {rng.choice(_LAST_NAMES)}"
        age = rng.randint(18, 39)
        gender = rng.choice(("male", "female"))
        pronoun = "He" if gender == "male" else "She"
        trait_text = ", ".join(traits[:-1]) + f" and {traits[-1]}" if len(traits) > 1 else traits[0]

        profile = {
            "name": name,
            "gender": gender,
            "age": age,
            "tone": f"Speaks in a {rng.choice(('wry', 'warm', 'clipped', 'breathless', 'measured'))} "
                    f"voice that softens when the topic turns to {skills[0].lower()}.",
            "career": career,
            "personality": f"{trait_text}, driven by a deep {aspiration.lower()} aspiration.",
            "advantages_and_disadvantages": f"{pronoun} is resourceful under pressure but "
                                            f"{rng.choice(('overcommits', 'keeps score', 'hates waiting', 'trusts too slowly'))}.",
            "hobby": f"Devoted to {skills[0]}, with a sideline in "
                     f"{rng.choice(('restoring old maps', 'urban foraging', 'pinhole photography', 'collecting train timetables'))}.",
            "family_relationship": f"{rng.choice(('Close to', 'Estranged from', 'Raised by', 'Writes weekly to'))} "
                                   f"{rng.choice(('a younger sibling', 'two aunts', 'their grandmother', 'a sprawling extended family'))}.",
            "social_relationship": f"Known around the {career.lower()} circuit as "
                                   f"{rng.choice(('a reliable fixture', 'a rising voice', 'an acquired taste', 'the quiet centre of the room'))}.",
            "living_conditions": f"Lives in {rng.choice(('a narrow flat above a bakery', 'a shared loft', 'a tidy canal house', 'a cluttered studio'))} "
                                 f"and saves for {rng.choice(('better tools', 'a long trip', 'a bigger workshop', 'early retirement'))}.",
        }
        return "Here is the designed character.\n\n" + json.dumps(profile, indent=2, ensure_ascii=False)

    def _synth_scenes(self, prompt: str, rng: random.Random) -> str:
        n = int(_grab(r"Imagine (\d+) scenes", prompt) or 20)
        name = _grab(r"You are ([^,]+),", prompt) or "The character"
        blocks = []
        for i in range(1, n + 1):
            scene_type = rng.choice(_SCENE_TYPES)
            location = rng.choice(_LOCATIONS)
            activity = rng.choice((
                "fields questions from a small crowd",
                "settles into a corner seat with an old acquaintance",
                "defends an unpopular opinion",
                "walks a newcomer through the basics",
                "trades stories with the regulars",
                "rehearses the points one more time",
            ))
            blocks.append(
                f"Scene {i}:\n"
                f"Type: {scene_type}\n"
                f"Location: {location.capitalize()}\n"
                f"Background: It is {rng.choice(('early morning', 'midday', 'late afternoon', 'evening'))} "
                f"at {location}, where {name} {activity}."
            )
        return "\n\n".join(blocks)

    def _synth_dialogue(self, prompt: str, rng: random.Random) -> str:
        main = _grab(r"The main character is (.+?) \.", prompt) or "Alex"
        partner = _grab(r"^You are chatting with (.+)$", prompt) or "Sam"
        emotion = _grab(r"^Emotion: (.+)$", prompt) or "Fine"
        topic = _grab(r"^Conversation Topic: (.+)$", prompt) or "small talk"
        location = _grab(r"^Location: (.+)$", prompt) or "a quiet room"
        status = _grab(r"^Status: (.+)$", prompt)

        background = status or (
            f"{main} and {partner} stand near the entrance of {location} "
            f"as the day settles around them."
        )
        lines = [
            "Background:",
            background,
            f"Emotion: {emotion}",
            f"Conversation topic: {topic}",
        ]

        main_said = partner_said = False
        n_turns = rng.randint(8, 13)
        for i in range(n_turns):
            last = i == n_turns - 1
            if i % 2 == 0:
                if rng.random() < 0.3 and not (last and not main_said):
                    speaker, action = main, "thinking"
                    text = (f"{rng.choice(('Why does', 'How does', 'Since when does'))} this {topic} "
                            f"talk leave me feeling so {emotion.lower()}? I should choose my words with care.")
                else:
                    speaker, action = main, "speaking"
                    main_said = True
                    text = (f"{rng.choice(_CHAT_OPENERS)} {partner.split()[0]}, "
                            f"{rng.choice(_CHAT_BODIES)}, and this {topic} business brings it all back.")
            else:
                speaker, action = partner, "speaking"
                partner_said = True
                text = (f"{rng.choice(_CHAT_OPENERS)} {main.split()[0]}, "
                        f"{rng.choice(_CHAT_BODIES)}. Go on, I am listening.")
            lines.append("")
            lines.append(f"{speaker} ({action}): {text}")
        if not main_said:
            lines.extend(["", f"{main} (speaking): Fine, let me say it plainly before we part."])
        if not partner_said:
            lines.extend(["", f"{partner} (speaking): I hear you. Tell me the rest tomorrow."])
        return "\n".join(lines)

    def _synth_questions(self, prompt: str, rng: random.Random) -> str:
        n = int(_grab(r"Generate (\d+) diverse interview questions", prompt) or 50)
        combos = [(s, t) for s in _QUESTION_STEMS for t in _QUESTION_SUBJECTS]
        rng.shuffle(combos)
        out = []
        for i, (stem, subject) in enumerate(combos[:n], 1):
            out.append(f"{i}. {stem} {subject}")
        return "\n".join(out)

    def _synth_judgement(self, prompt: str, rng: random.Random) -> str:
        if "Answer YES or NO" in prompt:
            return rng.choice(("YES", "NO"))
        if "most suitable candidate" in prompt:
            letters = re.findall(r"^([A-D])\) ", prompt, re.MULTILINE)
            return rng.choice(letters) if letters else "A"
        if "scale of 1-10" in prompt:
            return f"Score: {rng.randint(5, 10)}"
        return f"Score: {rng.randint(4, 7)}"
