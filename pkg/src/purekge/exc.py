"""
Exceptions for the purekge package.

Every error raised deliberately by the library derives from
:py:class:`KgeError` so callers can trap all of them with a single
``except`` clause.
"""

from typing import Any, List, Optional


class KgeError(Exception):
    """
    Generic exception originating from the purekge package.
    """

    # pylint: disable=too-few-public-methods


class ParseError(KgeError):
    """
    Raised when a line of a triple file or dictionary is malformed.

    The string representation has the form ``<source>:<line>: <message>``
    so it can be pasted straight into an editor.
    """

    def __init__(
        self, message: str, line: int, source: str = "<input>"
    ) -> None:
        super().__init__(f"{source}:{line}: {message}")
        self.line = line
        self.source = source
        self.reason = message


class InputEncodingError(ParseError):
    """
    Raised when an input file is not valid UTF-8.
    """

    def __init__(self, line: int, source: str = "<input>") -> None:
        super().__init__("invalid UTF-8", line, source)


class UnknownName(KgeError, LookupError):
    """
    Raised when an entity or relation name has no id in a vocabulary.

    :param name: The name which could not be resolved
    :param namespace: Either ``"entity"`` or ``"relation"``
    """

    def __init__(self, name: str, namespace: str = "entity") -> None:
        super().__init__(f"Unknown {namespace} name: {name!r}")
        self.name = name
        self.namespace = namespace


class EmptyInput(KgeError):
    """
    Raised when an operation needs at least one item but got none.
    """

    def __init__(self, what: str) -> None:
        super().__init__(f"{what} is empty")
        self.what = what


class NotEnoughLists(KgeError):
    """
    Raised when a consensus is requested over fewer than two rankings.
    """

    def __init__(self, count: int) -> None:
        super().__init__(
            f"A consensus needs at least 2 ranked lists, got {count}"
        )
        self.count = count


class ConfigError(KgeError):
    """
    Raised for invalid configuration values.
    """


class UnknownConfigKey(ConfigError):
    """
    Raised when a configuration file contains a key nobody understands.
    """

    def __init__(self, key: str, line: int = 0, source: str = "") -> None:
        location = f" ({source}:{line})" if source else ""
        super().__init__(f"Unknown configuration key {key!r}{location}")
        self.key = key
        self.line = line
        self.source = source


class NonFiniteLoss(KgeError):
    """
    Raised when a training batch produced a NaN or infinite loss.

    :param kind: The model kind in use
    :param triple: The first offending ``(h, r, t)`` triple
    :param score: The score of that triple
    """

    def __init__(self, kind: str, triple: Any, score: float) -> None:
        super().__init__(
            f"Non-finite loss for model {kind} on triple {tuple(triple)!r} "
            f"(score={score!r})"
        )
        self.kind = kind
        self.triple = triple
        self.score = score


class DivergenceError(KgeError):
    """
    Raised when training diverged. The parameters of the last epoch which
    finished with a finite loss are available as *last_good*. Before the
    first finished epoch these are the starting parameters (``None`` if
    those were not finite already).
    """

    def __init__(self, epoch: int, last_good: Optional[Any] = None) -> None:
        super().__init__(f"Training diverged in epoch {epoch}")
        self.epoch = epoch
        self.last_good = last_good


class CheckpointError(KgeError):
    """
    Superclass for errors reading checkpoint files.
    """


class BadMagic(CheckpointError):
    """
    Raised when a file does not start with the checkpoint magic bytes.
    """

    def __init__(self, found: bytes) -> None:
        super().__init__(f"Not a checkpoint file (magic bytes {found!r})")
        self.found = found


class TruncatedPayload(CheckpointError):
    """
    Raised when a checkpoint file ends in the middle of a value.
    """


class SizeMismatch(CheckpointError):
    """
    Raised when the payload size disagrees with the sizes in the header.
    """

    def __init__(self, expected: int, found: int) -> None:
        super().__init__(
            f"Checkpoint payload has {found} values but the header "
            f"announces {expected}"
        )
        self.expected = expected
        self.found = found


class KindMismatch(CheckpointError):
    """
    Raised when a checkpoint holds another model kind or dimension than the
    caller asked for.
    """


class VocabMismatch(KgeError):
    """
    Raised when a checkpoint and a vocabulary disagree on their sizes.
    """


class MissingPlugin(KgeError):
    """
    Raised when a pluggable module could not be found

    :param ns: The plugin namespace
    :param needle: The identifier that was looked up
    :param haystack: The known identifiers
    """

    def __init__(self, ns: str, needle: Any, haystack: List[Any]) -> None:
        msg = (
            f"Namespace {ns!r} did not contain a plugin "
            f"with identifier {needle!r}. "
            f"Known identifiers: {sorted(haystack)!r}."
        )
        super().__init__(msg)
        self.ns = ns
        self.needle = repr(needle)
        self.haystack = haystack


class UnknownModelKind(MissingPlugin):
    """
    Raised when no scoring-function plugin matches a model identifier.
    """


class UnknownOptimizer(ConfigError):
    """
    Raised when an optimizer name is not supported.
    """
