"""Exception types shared across the package."""


class CpsSynergyError(Exception):
    """Base class for all library errors."""


# --- corpus ingestion ---

class MalformedRow(CpsSynergyError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnknownCode(CpsSynergyError):
    def __init__(self, token: str):
        super().__init__(f"unknown code token {token!r}")
        self.token = token


class DuplicateId(CpsSynergyError):
    def __init__(self, utterance_id: str):
        super().__init__(f"duplicate utterance_id {utterance_id!r}")
        self.utterance_id = utterance_id


class UnknownEnum(CpsSynergyError):
    def __init__(self, field: str, token: str):
        super().__init__(f"unknown {field} value {token!r}")
        self.field = field
        self.token = token


class DuplicateGroup(CpsSynergyError):
    def __init__(self, group_id: str):
        super().__init__(f"duplicate group_id {group_id!r}")
        self.group_id = group_id


class MissingCode(CpsSynergyError):
    def __init__(self, utterance_id: str, source: str):
        super().__init__(f"utterance {utterance_id!r} has no {source} code")
        self.utterance_id = utterance_id
        self.source = source


class MissingProfile(CpsSynergyError):
    def __init__(self, group_id: str):
        super().__init__(f"no group profile for {group_id!r}")
        self.group_id = group_id


# --- prompt coding ---

class EmptyMessage(CpsSynergyError):
    pass


class Unparseable(CpsSynergyError):
    def __init__(self, response_text: str):
        super().__init__(f"no code token in response {response_text!r}")
        self.response_text = response_text


class TransportError(CpsSynergyError):
    def __init__(self, utterance_id: str, attempts: int, last_error: str = ""):
        super().__init__(
            f"transport failed for {utterance_id!r} after {attempts} attempt(s): {last_error}"
        )
        self.utterance_id = utterance_id
        self.attempts = attempts
        self.last_error = last_error


class CredentialError(CpsSynergyError):
    pass


# --- classification evaluation ---

class LengthMismatch(CpsSynergyError):
    def __init__(self, n_a: int, n_b: int):
        super().__init__(f"length mismatch: {n_a} vs {n_b}")
        self.n_a = n_a
        self.n_b = n_b


class EmptyInput(CpsSynergyError):
    pass


class EmptyMatrix(CpsSynergyError):
    pass


class BadK(CpsSynergyError):
    pass


# --- order parameters / synergy ---

class EmptyPanel(CpsSynergyError):
    pass


class InsufficientObservations(CpsSynergyError):
    def __init__(self, subsystem: str):
        super().__init__(f"subsystem {subsystem} needs at least 2 observations")
        self.subsystem = subsystem


class MissingWeight(CpsSynergyError):
    def __init__(self, code: str):
        super().__init__(f"no weight for metric {code}")
        self.code = code


# --- statistics ---

class TooFewPairs(CpsSynergyError):
    pass


class SampleTooSmall(CpsSynergyError):
    pass


class SampleTooLarge(CpsSynergyError):
    pass


class ZeroVariance(CpsSynergyError):
    pass


class TooFewGroups(CpsSynergyError):
    pass


class GroupTooSmall(CpsSynergyError):
    pass


class ZeroWithinVariance(CpsSynergyError):
    pass


class BothZeroVariance(CpsSynergyError):
    pass


class EmptyGroup(CpsSynergyError):
    pass
