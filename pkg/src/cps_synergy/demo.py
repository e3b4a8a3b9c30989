"""Bundled two-group synthetic corpus.

Ten weeks of observations (2 groups x weeks 0-4) with prescribed behavior
counts, used by the demo subcommand, the narrative example scripts, and the
fixture tests. The predicted-code column carries a deliberate systematic
bias: every third content-link (W2) message is mislabeled as idea
suggestion (S1), imitating an automatic coder that over-identifies
sense-making talk.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .corpus import TASK_CODES, Code, GroupProfile, Utterance, write_utterances_csv

#: (group, week) -> {code: utterance count}; the fixture oracle owns an
#: independent copy of this table.
DEMO_COUNTS = {
    ("D1", 0): {"O1": 3, "O2": 1, "W1": 6, "W2": 2, "W3": 1, "S1": 1, "S2": 0, "S3": 1, "C1": 0},
    ("D1", 1): {"O1": 1, "O2": 2, "W1": 4, "W2": 6, "W3": 3, "S1": 3, "S2": 1, "S3": 2, "C1": 1},
    ("D1", 2): {"O1": 0, "O2": 1, "W1": 3, "W2": 8, "W3": 4, "S1": 4, "S2": 2, "S3": 2, "C1": 2},
    ("D1", 3): {"O1": 1, "O2": 0, "W1": 2, "W2": 5, "W3": 6, "S1": 5, "S2": 1, "S3": 3, "C1": 1},
    ("D1", 4): {"O1": 0, "O2": 0, "W1": 3, "W2": 2, "W3": 5, "S1": 2, "S2": 0, "S3": 1, "C1": 3},
    ("D2", 0): {"O1": 4, "O2": 2, "W1": 8, "W2": 3, "W3": 2, "S1": 1, "S2": 1, "S3": 0, "C1": 0},
    ("D2", 1): {"O1": 2, "O2": 3, "W1": 5, "W2": 7, "W3": 4, "S1": 2, "S2": 2, "S3": 1, "C1": 0},
    ("D2", 2): {"O1": 1, "O2": 1, "W1": 4, "W2": 9, "W3": 6, "S1": 3, "S2": 1, "S3": 2, "C1": 1},
    ("D2", 3): {"O1": 0, "O2": 2, "W1": 3, "W2": 6, "W3": 7, "S1": 4, "S2": 3, "S3": 2, "C1": 1},
    ("D2", 4): {"O1": 1, "O2": 0, "W1": 2, "W2": 4, "W3": 3, "S1": 2, "S2": 1, "S3": 1, "C1": 2},
}

DEMO_PROFILES = (
    GroupProfile("D1", "SS", "All Students", "Homo", "Excellent", 4),
    GroupProfile("D2", "MS", "Teacher-Student Mixed", "Hetero", "Good", 5),
)

_PHRASES = {
    "I": "never mind, wrong chat",
    "O1": "I set up a shared folder for us, link above",
    "O2": "does anyone know how to enable screen sharing here?",
    "W1": "hi everyone, are you free to sync tomorrow evening?",
    "W2": "found a useful report on this, sending the link",
    "W3": "my section is drafted, keep it up folks",
    "S1": "I think we should frame this around two user scenarios",
    "S2": "not convinced by that framing, can we compare options?",
    "S3": "let's lock the outline on Wednesday and split the writing",
    "C1": "merged everyone's parts into the final document, see v3",
}

#: Every w2_bias_period-th W2 message (per group) is predicted as S1.
W2_BIAS_PERIOD = 3


def predicted_code(code_human: Code, w2_counter: int) -> Code:
    """Systematically biased predicted code for a demo utterance."""
    if code_human is Code.W2 and w2_counter % W2_BIAS_PERIOD == 0:
        return Code.S1
    return code_human


def build_demo_corpus() -> tuple[list[Utterance], list[GroupProfile]]:
    """Deterministic utterance list with both human and predicted codes."""
    utterances: list[Utterance] = []
    for group_id, n_members in (("D1", 4), ("D2", 5)):
        seq = 0
        counter = 0
        w2_seen = 0
        for week in range(5):
            week_codes: list[Code] = [Code.I]  # one irrelevant message per week
            for code in TASK_CODES:
                week_codes.extend([Code(code)] * DEMO_COUNTS[(group_id, week)][code])
            for code in week_codes:
                counter += 1
                if code is Code.W2:
                    w2_seen += 1
                pred = predicted_code(code, w2_seen) if code is not Code.I else Code.I
                utterances.append(
                    Utterance(
                        utterance_id=f"{group_id}-{counter:04d}",
                        group_id=group_id,
                        week=week,
                        seq=seq,
                        speaker_id=f"{group_id}-m{counter % n_members + 1}",
                        text=f"{_PHRASES[code.value]} ({group_id} {counter})",
                        code_human=code,
                        code_pred=pred,
                    )
                )
                seq += 1
    return utterances, list(DEMO_PROFILES)


def write_demo_corpus(directory: str | Path) -> tuple[Path, Path]:
    """Write the bundled corpus as utterances.csv and groups.csv."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    utterances, profiles = build_demo_corpus()
    upath = directory / "utterances.csv"
    gpath = directory / "groups.csv"
    write_utterances_csv(upath, utterances)
    with gpath.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group_id", "problem_type", "composition", "homogeneity", "quality", "n_members"])
        for p in profiles:
            writer.writerow([p.group_id, p.problem_type, p.composition, p.homogeneity, p.quality, p.n_members])
    return upath, gpath
