"""Append-only JSONL journals for questionnaires and responses.

Each submission is one line written in a single call and flushed to
disk, so a crash never leaves a partial record ahead of a complete
one.  Overrides are appended as their own entries and folded into the
responses on read; nothing is ever rewritten in place.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import replace
from pathlib import Path

from .core import Questionnaire, SurveyResponse

__all__ = ["JournalStore"]


class JournalStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._questionnaires = self.root / "questionnaires.jsonl"
        self._responses = self.root / "responses.jsonl"
        self._lock = threading.Lock()

    def _append(self, path: Path, entry: dict):
        line = json.dumps(entry, ensure_ascii=False) + "\n"
        with self._lock:
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())

    def append_questionnaire(self, questionnaire: Questionnaire):
        self._append(self._questionnaires, questionnaire.to_dict())

    def append_response(self, response: SurveyResponse):
        self._append(self._responses, response.to_dict())

    def append_override(self, response_id: str, accepted: bool):
        self._append(
            self._responses,
            {"override": {"response_id": response_id, "accepted": accepted}},
        )

    def questionnaires(self) -> dict[str, Questionnaire]:
        """All issued questionnaires; the first entry wins on a
        duplicated id."""
        out: dict[str, Questionnaire] = {}
        for entry in self._read(self._questionnaires):
            qn = Questionnaire.from_dict(entry)
            out.setdefault(qn.questionnaire_id, qn)
        return out

    def responses(self) -> list[SurveyResponse]:
        """All responses with any overrides applied, in submission
        order."""
        responses: list[SurveyResponse] = []
        index: dict[str, int] = {}
        for entry in self._read(self._responses):
            if "override" in entry and "response_id" not in entry:
                ov = entry["override"]
                at = index.get(ov["response_id"])
                if at is None:
                    continue
                resp = responses[at]
                if resp.validity is not None:
                    responses[at] = replace(
                        resp, validity=replace(resp.validity, override=ov["accepted"])
                    )
                continue
            resp = SurveyResponse.from_dict(entry)
            index[resp.response_id] = len(responses)
            responses.append(resp)
        return responses

    @staticmethod
    def _read(path: Path) -> list[dict]:
        if not path.exists():
            return []
        out = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    out.append(json.loads(line))
        return out
