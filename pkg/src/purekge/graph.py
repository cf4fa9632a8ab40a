"""
This module contains the triple store: parsing of DRKG-style TSV files,
name/id dictionaries, deterministic train/valid/test splits and the index of
known-true triples used by the filtered ranking protocol.

A triple file contains one ``head<TAB>relation<TAB>tail`` statement per line:

.. code-block:: text

    Compound::DB00811	GNBR::T::Compound:Disease	Disease::MESH:D045169
"""

import io
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import (
    IO,
    Dict,
    Iterable,
    List,
    Mapping,
    Sequence,
    Set,
    Tuple,
    Union,
)

import numpy as np

from purekge.const import (
    DEFAULT_SPLIT_RATIOS,
    ENTITY_DICT_FILE,
    ENTITY_TYPE_SEPARATOR,
    FIELD_SEPARATOR,
    RATIO_TOLERANCE,
    RELATION_DICT_FILE,
    UNKNOWN_ENTITY_TYPE,
)
from purekge.exc import ConfigError, InputEncodingError, ParseError, UnknownName
from purekge.typevars import IdArray, RawTriple, Triple
from purekge.util import TPath

LOG = logging.getLogger(__name__)

TByteSource = Union[bytes, IO[bytes], Iterable[bytes]]

_EMPTY_IDS: IdArray = np.zeros(0, dtype=np.int64)
_EMPTY_IDS.setflags(write=False)


@dataclass(frozen=True)
class Vocabulary:
    """
    Bidirectional mapping between names and dense integer ids.

    Ids are the positions in *entity_names* and *relation_names*. The
    reverse indices are derived on construction.
    """

    #: Entity names, the position is the entity id
    entity_names: Tuple[str, ...] = ()
    #: Relation names, the position is the relation id
    relation_names: Tuple[str, ...] = ()
    #: Reverse lookup "entity name -> id"
    entity_index: Mapping[str, int] = field(
        init=False, repr=False, compare=False
    )
    #: Reverse lookup "relation name -> id"
    relation_index: Mapping[str, int] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        for kind, names in (
            ("entity", self.entity_names),
            ("relation", self.relation_names),
        ):
            index = {name: i for i, name in enumerate(names)}
            if len(index) != len(names):
                raise ValueError(f"Duplicate {kind} names in vocabulary")
            object.__setattr__(self, f"{kind}_index", MappingProxyType(index))

    @property
    def n_entities(self) -> int:
        return len(self.entity_names)

    @property
    def n_relations(self) -> int:
        return len(self.relation_names)

    def entity_id(self, name: str) -> int:
        """
        Return the id of entity *name*

        :raises purekge.exc.UnknownName: if the name is not known
        """
        try:
            return self.entity_index[name]
        except KeyError:
            raise UnknownName(name, "entity") from None

    def relation_id(self, name: str) -> int:
        """
        Return the id of relation *name*

        :raises purekge.exc.UnknownName: if the name is not known
        """
        try:
            return self.relation_index[name]
        except KeyError:
            raise UnknownName(name, "relation") from None


@dataclass(frozen=True)
class Split:
    """
    A partition of a triple set into training, validation and test triples
    """

    train: Tuple[Triple, ...]
    valid: Tuple[Triple, ...]
    test: Tuple[Triple, ...]

    def sizes(self) -> Tuple[int, int, int]:
        return len(self.train), len(self.valid), len(self.test)


class FilterIndex:
    """
    Membership structure over all known-true triples.

    Besides plain membership tests it answers "which heads are known for
    ``(?, r, t)``" and "which tails are known for ``(h, r, ?)``" which is
    what the filtered ranking needs.

    >>> index = FilterIndex([Triple(0, 0, 1)])
    >>> Triple(0, 0, 1) in index
    True
    >>> index.contains(Triple(1, 0, 0))
    False
    """

    def __init__(self, triples: Iterable[Triple] = ()) -> None:
        known: Set[Tuple[int, int, int]] = set()
        heads: Dict[Tuple[int, int], List[int]] = defaultdict(list)
        tails: Dict[Tuple[int, int], List[int]] = defaultdict(list)
        for h, r, t in triples:
            key = (int(h), int(r), int(t))
            if key in known:
                continue
            known.add(key)
            heads[(key[1], key[2])].append(key[0])
            tails[(key[0], key[1])].append(key[2])
        self._known = frozenset(known)
        self._heads = {key: _frozen_ids(ids) for key, ids in heads.items()}
        self._tails = {key: _frozen_ids(ids) for key, ids in tails.items()}

    def __repr__(self) -> str:
        return f"<FilterIndex with {len(self)} triples>"

    def __len__(self) -> int:
        return len(self._known)

    def __contains__(self, triple: object) -> bool:
        if not isinstance(triple, tuple) or len(triple) != 3:
            return False
        return self.contains(Triple(*triple))

    def contains(self, triple: Triple) -> bool:
        """
        Return whether *triple* was part of the indexed triples
        """
        h, r, t = triple
        return (int(h), int(r), int(t)) in self._known

    def known_heads(self, r: int, t: int) -> IdArray:
        """
        Return the ids of all heads *h* such that ``(h, r, t)`` is known
        """
        return self._heads.get((int(r), int(t)), _EMPTY_IDS)

    def known_tails(self, h: int, r: int) -> IdArray:
        """
        Return the ids of all tails *t* such that ``(h, r, t)`` is known
        """
        return self._tails.get((int(h), int(r)), _EMPTY_IDS)


def _frozen_ids(ids: List[int]) -> IdArray:
    output = np.asarray(sorted(ids), dtype=np.int64)
    output.setflags(write=False)
    return output


def parse_triples(
    data: TByteSource, source: str = "<input>"
) -> List[RawTriple]:
    """
    Parse UTF-8 encoded triple lines.

    Blank lines are skipped, LF and CRLF line endings are both accepted and
    trailing whitespace is removed from each field. Duplicates are kept.

    >>> parse_triples(b"Compound::DB00811\\tTreats\\tDisease::MESH:D045169\\n")
    ... # doctest: +NORMALIZE_WHITESPACE
    [RawTriple(head='Compound::DB00811', relation='Treats',
               tail='Disease::MESH:D045169')]
    >>> parse_triples(b"")
    []

    :param data: Either the raw bytes or an iterable of byte lines (for
        example a file opened in binary mode)
    :param source: A name used in error messages (usually the file name)
    :raises purekge.exc.ParseError: if a line does not have exactly three
        non-empty fields
    :raises purekge.exc.InputEncodingError: on invalid UTF-8
    """
    lines: Iterable[bytes] = (
        io.BytesIO(data) if isinstance(data, (bytes, bytearray)) else data
    )
    output = []
    for lineno, raw_line in enumerate(lines, 1):
        try:
            line = raw_line.decode("utf8")
        except UnicodeDecodeError as exc:
            raise InputEncodingError(lineno, source) from exc
        line = line.rstrip("\r\n")
        if FIELD_SEPARATOR not in line and not line.strip():
            continue
        fields = [item.rstrip() for item in line.split(FIELD_SEPARATOR)]
        if len(fields) != 3:
            raise ParseError(
                f"expected 3 tab-separated fields, found {len(fields)}",
                lineno,
                source,
            )
        if not all(fields):
            raise ParseError("empty field", lineno, source)
        output.append(RawTriple(*fields))
    return output


def build_vocab(triples: Iterable[RawTriple]) -> Vocabulary:
    """
    Assign dense ids in order of first appearance.

    Entities are scanned head first, then tail, triple by triple.

    >>> vocab = build_vocab(
    ...     [RawTriple("A", "r1", "B"), RawTriple("B", "r1", "A")]
    ... )
    >>> dict(vocab.entity_index), dict(vocab.relation_index)
    ({'A': 0, 'B': 1}, {'r1': 0})
    """
    entities: Dict[str, None] = {}
    relations: Dict[str, None] = {}
    for head, relation, tail in triples:
        entities.setdefault(head)
        entities.setdefault(tail)
        relations.setdefault(relation)
    return Vocabulary(tuple(entities), tuple(relations))


def encode(triples: Iterable[RawTriple], vocab: Vocabulary) -> List[Triple]:
    """
    Translate names into ids, keeping the order.

    :raises purekge.exc.UnknownName: naming the first missing string
    """
    return [
        Triple(
            vocab.entity_id(head),
            vocab.relation_id(relation),
            vocab.entity_id(tail),
        )
        for head, relation, tail in triples
    ]


def decode(triples: Iterable[Triple], vocab: Vocabulary) -> List[RawTriple]:
    """
    Translate ids back into names (the inverse of :py:func:`encode`)
    """
    entities = vocab.entity_names
    relations = vocab.relation_names
    return [
        RawTriple(entities[h], relations[r], entities[t])
        for h, r, t in triples
    ]


def _partition_size(fraction: float, total: int) -> int:
    # round-half-up, Python's round() would round 0.5 to even
    return int(np.floor(fraction * total + 0.5))


def split_triples(
    triples: Iterable[Triple],
    ratios: Sequence[float] = DEFAULT_SPLIT_RATIOS,
    seed: int = 0,
) -> Split:
    """
    Deduplicate, shuffle and partition triples.

    The result is a pure function of the input order (after removing
    duplicates), the ratios and the seed.

    >>> triples = [Triple(i, 0, i + 1) for i in range(10)]
    >>> split = split_triples(triples, (0.8, 0.1, 0.1), 7)
    >>> split.sizes()
    (8, 1, 1)

    :raises purekge.exc.ConfigError: on invalid ratios
    """
    if len(ratios) != 3:
        raise ConfigError(
            f"Exactly three split ratios required, got {ratios!r}"
        )
    f_train, f_valid, f_test = (float(value) for value in ratios)
    if min(f_train, f_valid, f_test) <= 0:
        raise ConfigError(f"Split ratios must be positive, got {ratios!r}")
    if abs(f_train + f_valid + f_test - 1.0) > RATIO_TOLERANCE:
        raise ConfigError(f"Split ratios must sum to 1, got {ratios!r}")

    unique = list(dict.fromkeys(Triple(*map(int, item)) for item in triples))
    total = len(unique)
    order = np.random.default_rng(seed).permutation(total)
    shuffled = [unique[i] for i in order]

    n_train = min(_partition_size(f_train, total), total)
    n_valid = min(_partition_size(f_valid, total), total - n_train)
    output = Split(
        tuple(shuffled[:n_train]),
        tuple(shuffled[n_train : n_train + n_valid]),
        tuple(shuffled[n_train + n_valid :]),
    )
    if total:
        for name, size in zip(("train", "valid", "test"), output.sizes()):
            if size == 0:
                LOG.warning(
                    "Degenerate split: the %s part received no triples "
                    "(%d unique triples, ratios %r)",
                    name,
                    total,
                    tuple(ratios),
                )
    LOG.debug("Split %d unique triples into %r", total, output.sizes())
    return output


def entity_type(name: str) -> str:
    """
    Return the type tag of an entity name.

    >>> entity_type("Compound::DB00811")
    'Compound'
    >>> entity_type("Disease::SARS-CoV2 E")
    'Disease'
    >>> entity_type("plainname")
    'Unknown'
    """
    tag, separator, _ = name.partition(ENTITY_TYPE_SEPARATOR)
    if not separator:
        return UNKNOWN_ENTITY_TYPE
    return tag


def count_entity_types(vocab: Vocabulary) -> Dict[str, int]:
    """
    Count entities per type tag, ordered by tag
    """
    counts = Counter(entity_type(name) for name in vocab.entity_names)
    return dict(sorted(counts.items()))


def build_filter_index(split: Split) -> FilterIndex:
    """
    Index the union of all three parts of *split*
    """
    return FilterIndex([*split.train, *split.valid, *split.test])


def write_triples(path: TPath, triples: Iterable[RawTriple]) -> None:
    """
    Write named triples as a TSV file (no header)
    """
    with open(path, "w", encoding="utf8", newline="\n") as outfile:
        for triple in triples:
            outfile.write(FIELD_SEPARATOR.join(triple))
            outfile.write("\n")


def read_triples(path: TPath, vocab: Vocabulary) -> List[Triple]:
    """
    Parse a triple file and encode it with *vocab*
    """
    with open(path, "rb") as infile:
        return encode(parse_triples(infile, str(path)), vocab)


def _write_dictionary(path: Path, names: Sequence[str]) -> None:
    with open(path, "w", encoding="utf8", newline="\n") as outfile:
        for i, name in enumerate(names):
            outfile.write(f"{name}{FIELD_SEPARATOR}{i}\n")


def read_dictionary(path: TPath) -> Tuple[str, ...]:
    """
    Read a ``name<TAB>id`` dictionary and return the names ordered by id.

    :raises purekge.exc.ParseError: if the ids are not exactly ``0..N-1``
    """
    source = str(path)
    by_id: Dict[int, str] = {}
    with open(path, "rb") as infile:
        for lineno, raw_line in enumerate(infile, 1):
            try:
                line = raw_line.decode("utf8").rstrip("\r\n")
            except UnicodeDecodeError as exc:
                raise InputEncodingError(lineno, source) from exc
            if FIELD_SEPARATOR not in line and not line.strip():
                continue
            name, separator, raw_id = line.rpartition(FIELD_SEPARATOR)
            if not separator or not name:
                raise ParseError("expected 'name<TAB>id'", lineno, source)
            try:
                ident = int(raw_id)
            except ValueError:
                raise ParseError(
                    f"invalid id {raw_id!r}", lineno, source
                ) from None
            if ident in by_id:
                raise ParseError(f"duplicate id {ident}", lineno, source)
            by_id[ident] = name
    if sorted(by_id) != list(range(len(by_id))):
        raise ParseError("ids are not dense (0..N-1)", len(by_id), source)
    return tuple(by_id[i] for i in range(len(by_id)))


def write_vocab(directory: TPath, vocab: Vocabulary) -> None:
    """
    Write ``entities.dict`` and ``relations.dict`` into *directory*
    """
    folder = Path(directory)
    _write_dictionary(folder / ENTITY_DICT_FILE, vocab.entity_names)
    _write_dictionary(folder / RELATION_DICT_FILE, vocab.relation_names)


def read_vocab(directory: TPath) -> Vocabulary:
    """
    Load the dictionaries written by :py:func:`write_vocab`
    """
    folder = Path(directory)
    return Vocabulary(
        read_dictionary(folder / ENTITY_DICT_FILE),
        read_dictionary(folder / RELATION_DICT_FILE),
    )
