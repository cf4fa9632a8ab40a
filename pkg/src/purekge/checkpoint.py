"""
Binary persistence of model parameters.

A checkpoint file has a 20 byte header followed by the payload:

.. code-block:: text

    offset  size  content
    0       4     magic bytes b"KGE1"
    4       4     model kind code      (uint32, little-endian)
    8       4     number of entities   (uint32, little-endian)
    12      4     number of relations  (uint32, little-endian)
    16      4     embedding dimension  (uint32, little-endian)
    20      ...   entity rows, then relation rows, row-major,
                  little-endian float32

Parameters are computed in float64 and narrowed to float32 on save, so a
save/load/save cycle reproduces the first file byte for byte.

Next to each checkpoint a ``.meta`` text file holds ``key = value`` lines
(the training configuration, the epoch and the loss).
"""

import logging
import os
from pathlib import Path
from typing import Dict, Mapping, Optional

import numpy as np

from purekge.const import CHECKPOINT_MAGIC, CHECKPOINT_SUFFIX, METADATA_SUFFIX
from purekge.exc import (
    BadMagic,
    CheckpointError,
    KindMismatch,
    SizeMismatch,
    TruncatedPayload,
)
from purekge.model import ModelKind, ModelParams, scoring_function
from purekge.util import TPath

LOG = logging.getLogger(__name__)

HEADER_FIELDS = np.dtype("<u4")
PAYLOAD_VALUES = np.dtype("<f4")
HEADER_SIZE = len(CHECKPOINT_MAGIC) + 4 * HEADER_FIELDS.itemsize


def checkpoint_path(directory: TPath, kind: ModelKind) -> Path:
    """
    Return the conventional checkpoint location for *kind* in *directory*

    >>> checkpoint_path("out", ModelKind.RESCAL).as_posix()
    'out/RESCAL.kge'
    """
    return Path(directory) / f"{ModelKind(kind).value}{CHECKPOINT_SUFFIX}"


def metadata_path(path: TPath) -> Path:
    """
    Return the location of the metadata file belonging to checkpoint *path*
    """
    return Path(f"{path}{METADATA_SUFFIX}")


def _replace(path: Path, data: bytes) -> None:
    temporary = path.with_name(path.name + ".tmp")
    temporary.write_bytes(data)
    os.replace(temporary, path)


def encode_checkpoint(params: ModelParams) -> bytes:
    """
    Return the binary checkpoint representation of *params*
    """
    header = np.asarray(
        [
            params.kind.code,
            params.n_entities,
            params.n_relations,
            params.dim,
        ],
        dtype=HEADER_FIELDS,
    )
    payload = np.concatenate(
        [params.entity_emb.ravel(), params.relation_emb.ravel()]
    ).astype(PAYLOAD_VALUES)
    return CHECKPOINT_MAGIC + header.tobytes() + payload.tobytes()


def decode_checkpoint(
    data: bytes,
    expected_kind: Optional[ModelKind] = None,
    expected_dim: Optional[int] = None,
) -> ModelParams:
    """
    Parse the bytes produced by :py:func:`encode_checkpoint`.

    :raises purekge.exc.BadMagic: If the data is not a checkpoint
    :raises purekge.exc.TruncatedPayload: If the data ends inside the
        header or inside a value
    :raises purekge.exc.SizeMismatch: If the number of stored values does
        not match the sizes announced in the header
    :raises purekge.exc.KindMismatch: If *expected_kind* or *expected_dim*
        are given and differ from the stored ones
    """
    magic = data[: len(CHECKPOINT_MAGIC)]
    if magic != CHECKPOINT_MAGIC[: len(magic)] or not magic:
        raise BadMagic(magic)
    if len(data) < HEADER_SIZE:
        raise TruncatedPayload(
            f"Checkpoint header needs {HEADER_SIZE} bytes, got {len(data)}"
        )
    code, n_entities, n_relations, dim = (
        int(value)
        for value in np.frombuffer(
            data, dtype=HEADER_FIELDS, count=4, offset=len(CHECKPOINT_MAGIC)
        )
    )
    try:
        kind = ModelKind.from_code(code)
    except ValueError as exc:
        raise CheckpointError(f"Unknown model code {code} in header") from exc
    if expected_kind is not None and kind != expected_kind:
        raise KindMismatch(
            f"Checkpoint holds a {kind} model, expected {expected_kind}"
        )
    if expected_dim is not None and dim != expected_dim:
        raise KindMismatch(
            f"Checkpoint has dimension {dim}, expected {expected_dim}"
        )

    payload = data[HEADER_SIZE:]
    if len(payload) % PAYLOAD_VALUES.itemsize:
        raise TruncatedPayload(
            f"Checkpoint payload of {len(payload)} bytes ends inside a value"
        )
    scorer = scoring_function(kind)
    entity_width = scorer.entity_width(dim)
    relation_width = scorer.relation_width(dim)
    expected = n_entities * entity_width + n_relations * relation_width
    found = len(payload) // PAYLOAD_VALUES.itemsize
    if found != expected:
        raise SizeMismatch(expected, found)

    values = np.frombuffer(payload, dtype=PAYLOAD_VALUES).astype(np.float64)
    split = n_entities * entity_width
    return ModelParams(
        kind,
        dim,
        values[:split].reshape(n_entities, entity_width),
        values[split:].reshape(n_relations, relation_width),
    )


def save_checkpoint(
    params: ModelParams,
    path: TPath,
    metadata: Optional[Mapping[str, object]] = None,
) -> None:
    """
    Write *params* to *path*, replacing an existing file atomically.

    If *metadata* is given it is written to the sidecar file as
    ``key = value`` lines.
    """
    target = Path(path)
    _replace(target, encode_checkpoint(params))
    if metadata is not None:
        lines = "".join(f"{key} = {value}\n" for key, value in metadata.items())
        _replace(metadata_path(target), lines.encode("utf8"))
    LOG.debug("Wrote checkpoint %s", target)


def load_checkpoint(
    path: TPath,
    expected_kind: Optional[ModelKind] = None,
    expected_dim: Optional[int] = None,
) -> ModelParams:
    """
    Read a checkpoint file. See :py:func:`decode_checkpoint` for the
    possible errors.
    """
    return decode_checkpoint(
        Path(path).read_bytes(), expected_kind, expected_dim
    )


def read_metadata(path: TPath) -> Dict[str, str]:
    """
    Return the sidecar metadata of checkpoint *path* (empty if there is
    none)
    """
    sidecar = metadata_path(path)
    if not sidecar.exists():
        return {}
    output = {}
    for line in sidecar.read_text(encoding="utf8").splitlines():
        key, separator, value = line.partition("=")
        if separator:
            output[key.strip()] = value.strip()
    return output
