"""Discourse corpus data model, file ingestion, validation, and aggregation.

The unit of data is one coded chat utterance. Utterances live in a five-week
activity window (weeks 0-4), belong to exactly one group, and carry up to two
codes: a human-assigned one and a model-predicted one. Aggregation turns the
utterance stream into a (group, week) panel of per-behavior metric values,
the input of the order-parameter pipeline in :mod:`cps_synergy.sdm`.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .errors import (
    DuplicateGroup,
    DuplicateId,
    MalformedRow,
    MissingCode,
    MissingProfile,
    UnknownCode,
    UnknownEnum,
)

WEEKS = (0, 1, 2, 3, 4)

#: Interaction level per code token. O/W/S/C tokens form the four task
#: subsystems; I marks task-irrelevant messages and never enters the panel.
LEVELS = {
    "I": "Irrelevant",
    "O1": "Operation",
    "O2": "Operation",
    "W1": "Wayfinding",
    "W2": "Wayfinding",
    "W3": "Wayfinding",
    "S1": "SenseMaking",
    "S2": "SenseMaking",
    "S3": "SenseMaking",
    "C1": "Creation",
}

LEVEL_DISPLAY = {
    "Irrelevant": "Irrelevant Interaction (I)",
    "Operation": "Operational Interaction (O)",
    "Wayfinding": "Wayfinding Interaction (W)",
    "SenseMaking": "Sense-making Interaction (S)",
    "Creation": "Creation Interaction (C)",
}

SUBSYSTEMS = {
    "O": ("O1", "O2"),
    "W": ("W1", "W2", "W3"),
    "S": ("S1", "S2", "S3"),
    "C": ("C1",),
}

#: The nine task-relevant codes, in codebook order.
TASK_CODES = ("O1", "O2", "W1", "W2", "W3", "S1", "S2", "S3", "C1")

PROBLEM_TYPES = ("SS", "MS", "DS")
HOMOGENEITY = ("Homo", "Hetero")
QUALITY = ("Excellent", "Good", "Pass", "Fail")


class Code(str, Enum):
    """Closed ten-token coding scheme for collaborative discourse."""

    I = "I"  # noqa: E741 - token name fixed by the coding scheme
    O1 = "O1"
    O2 = "O2"
    W1 = "W1"
    W2 = "W2"
    W3 = "W3"
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    C1 = "C1"

    @property
    def level(self) -> str:
        return LEVELS[self.value]

    @property
    def subsystem(self) -> Optional[str]:
        """Subsystem letter (O/W/S/C), or None for the irrelevant code."""
        return None if self.value == "I" else self.value[0]

    @classmethod
    def parse(cls, token: str) -> "Code":
        try:
            return cls(token)
        except ValueError:
            raise UnknownCode(token) from None


@dataclass(frozen=True)
class Utterance:
    utterance_id: str
    group_id: str
    week: int
    seq: int
    speaker_id: str
    text: str
    code_human: Optional[Code] = None
    code_pred: Optional[Code] = None

    def code(self, source: str) -> Optional[Code]:
        if source == "human":
            return self.code_human
        if source == "pred":
            return self.code_pred
        raise ValueError(f"code source must be 'human' or 'pred', got {source!r}")

    def with_pred(self, code: Code) -> "Utterance":
        return replace(self, code_pred=code)


@dataclass(frozen=True)
class CodebookEntry:
    code: Code
    behavior_name: str
    description: str
    example: str

    @property
    def level(self) -> str:
        return self.code.level


#: Built-in codebook: ten behaviors over five interaction levels.
BUILTIN_CODEBOOK = (
    CodebookEntry(Code.I, "Irrelevant Info", "Operations or messages unrelated to the task", "Message was withdrawn"),
    CodebookEntry(Code.O1, "Space Setup", "Initiating chat groups, creating shared documents", "I created a group, please join"),
    CodebookEntry(Code.O2, "Technical Operation", "Technical guidance on platform use, tools", "How to share the screen?"),
    CodebookEntry(Code.W1, "Social Connection", "Greetings, welcoming, checking availability", "Hi everyone! Are you free tomorrow?"),
    CodebookEntry(Code.W2, "Content Link", "Sharing resources, providing/asking basic info", "Here is a related paper I found"),
    CodebookEntry(Code.W3, "Task Alignment", "Reporting progress, encouraging peers", "I have finished my part, keep going!"),
    CodebookEntry(Code.S1, "Idea Suggestion", "Offering opinions, suggestions, recommendations", "We can try case analysis, it fits our problem"),
    CodebookEntry(Code.S2, "Conflict Negotiation", "Raising questions, pointing out disagreements", "I disagree, let's discuss the reasons"),
    CodebookEntry(Code.S3, "Planning/Decision", "Coordinating tasks, deciding methods", "Let's meet Wednesday to finalize the plan"),
    CodebookEntry(Code.C1, "Integrative Creation", "Integrating information, co-creating content", "[document] Here's the document we've put together"),
)


@dataclass(frozen=True)
class GroupProfile:
    group_id: str
    problem_type: str
    composition: str
    homogeneity: str
    quality: str
    n_members: int


@dataclass(frozen=True)
class MetricObservation:
    """Metric values for one (group, week): code token -> non-negative value."""

    group_id: str
    week: int
    values: Mapping[str, float]


@dataclass
class MetricPanel:
    """Per-(group, week) mean behavioral metric values for the 9 task codes."""

    observations: list[MetricObservation]
    normalization: str  # "per_member" | "raw_count"

    def column(self, code: str) -> list[float]:
        return [obs.values[code] for obs in self.observations]

    def keys(self) -> list[tuple[str, int]]:
        return [(obs.group_id, obs.week) for obs in self.observations]


@dataclass
class ValidationReport:
    """Read-only consistency report over a parsed corpus."""

    n_utterances: int = 0
    n_groups: int = 0
    orphan_group_ids: list[str] = field(default_factory=list)
    groups_without_utterances: list[str] = field(default_factory=list)
    absent_group_weeks: dict[str, list[int]] = field(default_factory=dict)
    human_code_coverage: float = 0.0
    pred_code_coverage: float = 0.0
    warnings: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.warnings

    def to_dict(self) -> dict:
        return {
            "n_utterances": self.n_utterances,
            "n_groups": self.n_groups,
            "orphan_group_ids": self.orphan_group_ids,
            "groups_without_utterances": self.groups_without_utterances,
            "absent_group_weeks": self.absent_group_weeks,
            "human_code_coverage": self.human_code_coverage,
            "pred_code_coverage": self.pred_code_coverage,
            "warnings": self.warnings,
            "notes": self.notes,
        }


UTTERANCE_COLUMNS = ["utterance_id", "group_id", "week", "seq", "speaker_id", "text", "code_human", "code_pred"]
GROUP_COLUMNS = ["group_id", "problem_type", "composition", "homogeneity", "quality", "n_members"]
CODEBOOK_COLUMNS = ["code", "level", "behavior_name", "description", "example"]


def _parse_optional_code(token: str, line: int) -> Optional[Code]:
    token = token.strip()
    if not token:
        return None
    return Code.parse(token)


def _parse_int(token, line: int, name: str) -> int:
    try:
        return int(token)
    except (TypeError, ValueError):
        raise MalformedRow(line, f"{name} must be an integer, got {token!r}") from None


def _build_utterance(rec: dict, line: int) -> Utterance:
    week = _parse_int(rec.get("week"), line, "week")
    if week not in WEEKS:
        raise MalformedRow(line, f"week must be in 0..4, got {week}")
    seq = _parse_int(rec.get("seq"), line, "seq")
    if seq < 0:
        raise MalformedRow(line, f"seq must be >= 0, got {seq}")
    utterance_id = str(rec.get("utterance_id") or "").strip()
    group_id = str(rec.get("group_id") or "").strip()
    if not utterance_id:
        raise MalformedRow(line, "empty utterance_id")
    if not group_id:
        raise MalformedRow(line, "empty group_id")
    return Utterance(
        utterance_id=utterance_id,
        group_id=group_id,
        week=week,
        seq=seq,
        speaker_id=str(rec.get("speaker_id") or ""),
        text=str(rec.get("text") or ""),
        code_human=_parse_optional_code(str(rec.get("code_human") or ""), line),
        code_pred=_parse_optional_code(str(rec.get("code_pred") or ""), line),
    )


def parse_utterances(path: str | Path, format: Optional[str] = None) -> list[Utterance]:
    """Load utterances from a CSV or JSONL file.

    CSV files must carry the exact header
    ``utterance_id,group_id,week,seq,speaker_id,text,code_human,code_pred``
    (the two code columns may be empty). JSONL files carry one object per
    line with the same field names. The result is sorted by
    (group_id, week, seq); within each group the seq values must then be
    strictly increasing.
    """
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv"
    if format not in ("csv", "jsonl"):
        raise ValueError(f"format must be 'csv' or 'jsonl', got {format!r}")

    utterances: list[Utterance] = []
    lines: dict[str, int] = {}
    if format == "csv":
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise MalformedRow(1, "missing header row") from None
            if header != UTTERANCE_COLUMNS:
                raise MalformedRow(1, f"expected columns {UTTERANCE_COLUMNS}, got {header}")
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(UTTERANCE_COLUMNS):
                    raise MalformedRow(line_no, f"expected {len(UTTERANCE_COLUMNS)} fields, got {len(row)}")
                rec = dict(zip(UTTERANCE_COLUMNS, row))
                utt = _build_utterance(rec, line_no)
                _register(utt, line_no, utterances, lines)
    else:
        with path.open(encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    rec = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise MalformedRow(line_no, f"invalid JSON: {exc}") from None
                if not isinstance(rec, dict):
                    raise MalformedRow(line_no, "expected a JSON object")
                utt = _build_utterance(rec, line_no)
                _register(utt, line_no, utterances, lines)

    utterances.sort(key=lambda u: (u.group_id, u.week, u.seq))
    _check_seq_order(utterances, lines)
    return utterances


def _register(utt: Utterance, line_no: int, out: list[Utterance], lines: dict[str, int]) -> None:
    if utt.utterance_id in lines:
        raise DuplicateId(utt.utterance_id)
    lines[utt.utterance_id] = line_no
    out.append(utt)


def _check_seq_order(utterances: Sequence[Utterance], lines: dict[str, int]) -> None:
    # After the (group, week, seq) sort, seq must be strictly increasing
    # inside each group; a violation means duplicate positions or weeks
    # inconsistent with the chronological stream.
    prev: dict[str, Utterance] = {}
    for utt in utterances:
        before = prev.get(utt.group_id)
        if before is not None and utt.seq <= before.seq:
            raise MalformedRow(
                lines[utt.utterance_id],
                f"seq {utt.seq} of {utt.utterance_id!r} does not advance the "
                f"stream of group {utt.group_id!r} (previous seq {before.seq})",
            )
        prev[utt.group_id] = utt


def write_utterances_csv(path: str | Path, utterances: Sequence[Utterance]) -> None:
    """Write utterances back out under the standard column contract."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(UTTERANCE_COLUMNS)
        for u in utterances:
            writer.writerow(
                [
                    u.utterance_id,
                    u.group_id,
                    u.week,
                    u.seq,
                    u.speaker_id,
                    u.text,
                    u.code_human.value if u.code_human else "",
                    u.code_pred.value if u.code_pred else "",
                ]
            )


def parse_group_profiles(path: str | Path) -> list[GroupProfile]:
    """Load group metadata from CSV with the documented column contract."""
    path = Path(path)
    profiles: list[GroupProfile] = []
    seen: set[str] = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(1, "missing header row") from None
        if header != GROUP_COLUMNS:
            raise MalformedRow(1, f"expected columns {GROUP_COLUMNS}, got {header}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(GROUP_COLUMNS):
                raise MalformedRow(line_no, f"expected {len(GROUP_COLUMNS)} fields, got {len(row)}")
            rec = dict(zip(GROUP_COLUMNS, row))
            group_id = rec["group_id"].strip()
            if not group_id:
                raise MalformedRow(line_no, "empty group_id")
            if group_id in seen:
                raise DuplicateGroup(group_id)
            seen.add(group_id)
            if rec["problem_type"] not in PROBLEM_TYPES:
                raise UnknownEnum("problem_type", rec["problem_type"])
            if rec["homogeneity"] not in HOMOGENEITY:
                raise UnknownEnum("homogeneity", rec["homogeneity"])
            if rec["quality"] not in QUALITY:
                raise UnknownEnum("quality", rec["quality"])
            n_members = _parse_int(rec["n_members"], line_no, "n_members")
            if n_members < 1:
                raise MalformedRow(line_no, f"n_members must be >= 1, got {n_members}")
            profiles.append(
                GroupProfile(
                    group_id=group_id,
                    problem_type=rec["problem_type"],
                    composition=rec["composition"],
                    homogeneity=rec["homogeneity"],
                    quality=rec["quality"],
                    n_members=n_members,
                )
            )
    return profiles


def load_codebook(path: str | Path) -> tuple[CodebookEntry, ...]:
    """Load a codebook override (e.g. a translation) from CSV.

    The file must define each of the ten codes exactly once, and each row's
    level must agree with the code's fixed interaction level.
    """
    path = Path(path)
    entries: dict[Code, CodebookEntry] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CODEBOOK_COLUMNS:
            raise MalformedRow(1, f"expected columns {CODEBOOK_COLUMNS}, got {header}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CODEBOOK_COLUMNS):
                raise MalformedRow(line_no, f"expected {len(CODEBOOK_COLUMNS)} fields, got {len(row)}")
            code = Code.parse(row[0].strip())
            if row[1].strip() != code.level:
                raise MalformedRow(line_no, f"code {code.value} has level {code.level}, got {row[1]!r}")
            if code in entries:
                raise MalformedRow(line_no, f"code {code.value} defined twice")
            entries[code] = CodebookEntry(code, row[2], row[3], row[4])
    missing = [c.value for c in Code if c not in entries]
    if missing:
        raise MalformedRow(1, f"codebook incomplete, missing {missing}")
    return tuple(entries[Code(t)] for t in LEVELS)


def codebook_to_rows(codebook: Iterable[CodebookEntry]) -> list[list[str]]:
    """Serialize a codebook back to its CSV row contract (round-trippable)."""
    rows = [list(CODEBOOK_COLUMNS)]
    for entry in codebook:
        rows.append([entry.code.value, entry.level, entry.behavior_name, entry.description, entry.example])
    return rows


def validate_corpus(utterances: Sequence[Utterance], profiles: Sequence[GroupProfile]) -> ValidationReport:
    """Cross-check utterances against group profiles without mutating either."""
    report = ValidationReport()
    report.n_utterances = len(utterances)
    report.n_groups = len(profiles)

    profile_ids = {p.group_id for p in profiles}
    seen_groups: dict[str, set[int]] = {}
    n_human = n_pred = 0
    for utt in utterances:
        seen_groups.setdefault(utt.group_id, set()).add(utt.week)
        if utt.code_human is not None:
            n_human += 1
        if utt.code_pred is not None:
            n_pred += 1

    report.orphan_group_ids = sorted(set(seen_groups) - profile_ids)
    for gid in report.orphan_group_ids:
        report.warnings.append(f"group {gid!r} appears in utterances but has no profile")

    report.groups_without_utterances = sorted(profile_ids - set(seen_groups))
    for gid in report.groups_without_utterances:
        report.warnings.append(f"group {gid!r} has a profile but no utterances")

    for gid in sorted(profile_ids & set(seen_groups)):
        absent = [w for w in WEEKS if w not in seen_groups[gid]]
        if absent:
            report.absent_group_weeks[gid] = absent
            report.notes.append(f"group {gid!r} has no utterances in weeks {absent}")

    if utterances:
        report.human_code_coverage = n_human / len(utterances)
        report.pred_code_coverage = n_pred / len(utterances)
    return report


def aggregate_metrics(
    utterances: Sequence[Utterance],
    profiles: Sequence[GroupProfile],
    code_source: str = "human",
    normalization: str = "per_member",
    zero_fill: bool = False,
) -> MetricPanel:
    """Aggregate coded utterances into the (group, week) metric panel.

    Each observation holds, per task code, the utterance count normalized by
    group size (``per_member``) or the raw count (``raw_count``). Irrelevant
    (I) utterances never count. By default a (group, week) with zero
    task-relevant utterances is omitted; with ``zero_fill`` the panel carries
    one all-zero observation for every profiled group and week instead.
    """
    if normalization not in ("per_member", "raw_count"):
        raise ValueError(f"normalization must be 'per_member' or 'raw_count', got {normalization!r}")
    members = {p.group_id: p.n_members for p in profiles}

    counts: dict[tuple[str, int], dict[str, int]] = {}
    for utt in utterances:
        if utt.group_id not in members:
            raise MissingProfile(utt.group_id)
        code = utt.code(code_source)
        if code is None:
            raise MissingCode(utt.utterance_id, code_source)
        if code is Code.I:
            continue
        cell = counts.setdefault((utt.group_id, utt.week), {c: 0 for c in TASK_CODES})
        cell[code.value] += 1

    if zero_fill:
        keys = [(p.group_id, w) for p in profiles for w in WEEKS]
    else:
        keys = sorted(counts)

    observations = []
    for group_id, week in sorted(keys):
        cell = counts.get((group_id, week), {c: 0 for c in TASK_CODES})
        denom = members[group_id] if normalization == "per_member" else 1
        values = {c: cell[c] / denom for c in TASK_CODES}
        observations.append(MetricObservation(group_id, week, values))
    return MetricPanel(observations=observations, normalization=normalization)
