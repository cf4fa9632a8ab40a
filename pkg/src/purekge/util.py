"""
Collection of utility functions for the purekge package.
"""

import hashlib
import logging
import os
import pkgutil
from types import ModuleType
from typing import Generator, Iterable, List, Mapping, Optional, Union

import numpy as np

from purekge.const import THREADS_ENV
from purekge.exc import ConfigError, InputEncodingError
from purekge.typevars import IdArray, Triple

LOG = logging.getLogger(__name__)

TPath = Union[str, "os.PathLike[str]"]


def iter_namespace(
    ns_pkg: ModuleType,
) -> Generator[pkgutil.ModuleInfo, None, None]:
    """
    Iterates over modules inside the given namespace
    """
    # The prefix makes the yielded names absolute so they can be handed to
    # import_module unchanged.
    return pkgutil.iter_modules(ns_pkg.__path__, ns_pkg.__name__ + ".")


def as_id_array(triples: Iterable[Triple]) -> IdArray:
    """
    Stack triples into an ``(n, 3)`` integer array.

    >>> as_id_array([Triple(0, 1, 2), Triple(3, 0, 1)]).tolist()
    [[0, 1, 2], [3, 0, 1]]
    >>> as_id_array([]).shape
    (0, 3)
    """
    rows = [tuple(triple) for triple in triples]
    if not rows:
        return np.zeros((0, 3), dtype=np.int64)
    return np.asarray(rows, dtype=np.int64).reshape(-1, 3)


def read_name_list(path: TPath) -> List[str]:
    """
    Read a "one name per line" file.

    Surrounding whitespace is trimmed and blank lines are skipped. The order
    of the file is kept, including duplicates.
    """
    source = str(path)
    names = []
    with open(path, "rb") as infile:
        for lineno, raw_line in enumerate(infile, 1):
            try:
                line = raw_line.decode("utf8")
            except UnicodeDecodeError as exc:
                raise InputEncodingError(lineno, source) from exc
            name = line.strip()
            if name:
                names.append(name)
    return names


def resolve_workers(
    requested: Optional[int] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> int:
    """
    Determine how many worker threads to use.

    An explicit *requested* value wins over the ``KGE_THREADS`` environment
    variable. ``0`` means "single-threaded".

    >>> resolve_workers(environ={})
    0
    >>> resolve_workers(environ={"KGE_THREADS": "4"})
    4
    >>> resolve_workers(2, environ={"KGE_THREADS": "4"})
    2
    """
    if requested is not None:
        value = requested
    else:
        env = os.environ if environ is None else environ
        raw = env.get(THREADS_ENV, "").strip() or "0"
        try:
            value = int(raw)
        except ValueError as exc:
            raise ConfigError(
                f"{THREADS_ENV} must be an integer, got {raw!r}"
            ) from exc
    if value < 0:
        raise ConfigError(f"Worker count must not be negative, got {value}")
    return value


def array_checksum(*arrays: np.ndarray) -> str:
    """
    Return a hex SHA-256 digest over the raw bytes of all *arrays*.

    Equal digests mean bit-identical arrays (same dtype, shape order and
    values).
    """
    digest = hashlib.sha256()
    for array in arrays:
        digest.update(np.ascontiguousarray(array).tobytes())
    return digest.hexdigest()
