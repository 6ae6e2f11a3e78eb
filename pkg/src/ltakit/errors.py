"""Shared exception types. The CLI maps these onto process exit codes."""


class DataError(ValueError):
    """Invalid input data: bad file contents, dimension mismatches, broken invariants."""


class IntegrityError(DataError):
    """A stored checksum does not match the recomputed one."""


class LlmError(RuntimeError):
    """Base class for language-model endpoint failures."""


class TransportError(LlmError):
    """Network or HTTP failure that persisted past the retry budget."""


class ProtocolError(LlmError):
    """The endpoint answered, but the body is not a chat completion."""


class ScriptExhausted(RuntimeError):
    """The scripted mock ran out of entries: the test asked for more calls than it scripted."""
