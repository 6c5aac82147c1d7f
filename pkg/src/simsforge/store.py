"""File-backed workspace: everything the pipeline persists lives here.

Layout under the workspace root:

    data/characters/{id}.json
    data/scenes/{id}.json
    data/dialogues/{id}/{scene_index}.json   (script + raw reply)
    data/interviews/{id}.json
    data/qc_sample.json
    data/qc_ledger.json
    data/sessions/{session_id}.jsonl         (append-only event log)
    data/evaluations/{id}.json
    out/                                     (exports, manifest, reports)
"""

from __future__ import annotations

import json
from pathlib import Path

from .dialogue import DialogueScript, QcLedger
from .errors import FileMissing, UnknownCharacter
from .interview import InterviewQuestion
from .persona import CharacterRecord
from .scene import Scene


def _read_json(path: Path):
    if not path.exists():
        raise FileMissing(str(path))
    return json.loads(path.read_text(encoding="utf-8"))


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


class Workspace:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.data = self.root / "data"
        self.out = self.root / "out"

    # -- characters ---------------------------------------------------------

    def character_path(self, character_id: str) -> Path:
        return self.data / "characters" / f"{character_id}.json"

    def save_character(self, record: CharacterRecord) -> Path:
        path = self.character_path(record.id)
        _write_json(path, record.to_dict())
        return path

    def load_character(self, character_id: str) -> CharacterRecord:
        path = self.character_path(character_id)
        if not path.exists():
            raise UnknownCharacter(character_id)
        return CharacterRecord.from_dict(_read_json(path))

    def list_characters(self) -> list[CharacterRecord]:
        folder = self.data / "characters"
        if not folder.exists():
            return []
        return [
            CharacterRecord.from_dict(_read_json(p))
            for p in sorted(folder.glob("*.json"))
        ]

    def free_character_id(self, base: str) -> str:
        """base, base-2, base-3, ... whichever is not taken yet."""
        if not self.character_path(base).exists():
            return base
        k = 2
        while self.character_path(f"{base}-{k}").exists():
            k += 1
        return f"{base}-{k}"

    # -- scenes ---------------------------------------------------------------

    def save_scenes(self, character_id: str, scenes: list[Scene]) -> Path:
        path = self.data / "scenes" / f"{character_id}.json"
        _write_json(path, [s.to_dict() for s in scenes])
        return path

    def load_scenes(self, character_id: str) -> list[Scene]:
        return [
            Scene.from_dict(d)
            for d in _read_json(self.data / "scenes" / f"{character_id}.json")
        ]

    def has_scenes(self, character_id: str) -> bool:
        return (self.data / "scenes" / f"{character_id}.json").exists()

    # -- dialogue scripts -----------------------------------------------------

    def script_path(self, character_id: str, scene_index: int) -> Path:
        return self.data / "dialogues" / character_id / f"{scene_index}.json"

    def save_script(self, script: DialogueScript, raw: str) -> Path:
        path = self.script_path(script.character_id, script.scene_index)
        _write_json(path, {"script": script.to_dict(), "raw": raw})
        return path

    def load_script(self, character_id: str, scene_index: int) -> DialogueScript:
        payload = _read_json(self.script_path(character_id, scene_index))
        return DialogueScript.from_dict(payload["script"])

    def load_all_scripts(self) -> list[DialogueScript]:
        folder = self.data / "dialogues"
        if not folder.exists():
            return []
        out = []
        for char_dir in sorted(folder.iterdir()):
            if not char_dir.is_dir():
                continue
            for p in sorted(char_dir.glob("*.json"), key=lambda q: int(q.stem)):
                out.append(DialogueScript.from_dict(_read_json(p)["script"]))
        return out

    def load_script_by_ref(self, ref: str) -> DialogueScript:
        character_id, _, index = ref.rpartition("/")
        return self.load_script(character_id, int(index))

    # -- interviews -----------------------------------------------------------

    def save_questions(self, character_id: str, questions: list[InterviewQuestion]) -> Path:
        path = self.data / "interviews" / f"{character_id}.json"
        _write_json(path, [q.to_dict() for q in questions])
        return path

    def load_questions(self, character_id: str) -> list[InterviewQuestion]:
        return [
            InterviewQuestion.from_dict(d)
            for d in _read_json(self.data / "interviews" / f"{character_id}.json")
        ]

    # -- QC ---------------------------------------------------------------------

    def save_qc_sample(self, refs: list[str]) -> Path:
        path = self.data / "qc_sample.json"
        _write_json(path, refs)
        return path

    def load_qc_sample(self) -> list[str]:
        path = self.data / "qc_sample.json"
        return [str(x) for x in _read_json(path)] if path.exists() else []

    def save_qc_ledger(self, ledger: QcLedger) -> Path:
        path = self.data / "qc_ledger.json"
        _write_json(path, ledger.to_dict())
        return path

    def load_qc_ledger(self) -> QcLedger | None:
        path = self.data / "qc_ledger.json"
        return QcLedger.from_dict(_read_json(path)) if path.exists() else None

    # -- sessions ---------------------------------------------------------------

    def session_path(self, session_id: str) -> Path:
        return self.data / "sessions" / f"{session_id}.jsonl"

    def append_session_event(self, session_id: str, event: dict) -> None:
        path = self.session_path(session_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")

    def load_session_events(self, session_id: str) -> list[dict]:
        path = self.session_path(session_id)
        if not path.exists():
            return []
        events = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                events.append(json.loads(line))
        return events

    def list_session_ids(self) -> list[str]:
        folder = self.data / "sessions"
        if not folder.exists():
            return []
        return sorted(p.stem for p in folder.glob("*.jsonl"))

    # -- evaluations --------------------------------------------------------------

    def save_evaluation(self, evaluation_id: str, payload: dict) -> Path:
        path = self.data / "evaluations" / f"{evaluation_id}.json"
        _write_json(path, payload)
        return path

    def load_evaluation(self, evaluation_id: str) -> dict:
        return _read_json(self.data / "evaluations" / f"{evaluation_id}.json")

    def list_evaluations(self) -> list[dict]:
        folder = self.data / "evaluations"
        if not folder.exists():
            return []
        return [_read_json(p) for p in sorted(folder.glob("*.json"))]

    # -- run manifest ----------------------------------------------------------

    def manifest_path(self) -> Path:
        return self.out / "manifest.json"

    def load_manifest(self) -> dict:
        path = self.manifest_path()
        return _read_json(path) if path.exists() else {}

    def save_manifest(self, manifest: dict) -> Path:
        _write_json(self.manifest_path(), manifest)
        return self.manifest_path()
