"""
Tests for the binary checkpoint format
"""

import numpy as np
import pytest

from purekge.checkpoint import (
    HEADER_SIZE,
    checkpoint_path,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    metadata_path,
    read_metadata,
    save_checkpoint,
)
from purekge.exc import (
    BadMagic,
    CheckpointError,
    KindMismatch,
    SizeMismatch,
    TruncatedPayload,
)
from purekge.model import ModelKind, init_params, score_triples

from .conftest import ALL_KINDS


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_save_load_save_is_byte_identical(kind, tmp_path):
    params = init_params(kind, 7, 3, 6, seed=1)
    first = checkpoint_path(tmp_path, kind)
    save_checkpoint(params, first)
    loaded = load_checkpoint(first, kind, 6)
    second = tmp_path / "again.kge"
    save_checkpoint(loaded, second)
    assert first.read_bytes() == second.read_bytes()
    assert loaded.kind == kind
    assert loaded.entity_emb.shape == params.entity_emb.shape
    assert loaded.relation_emb.shape == params.relation_emb.shape


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_scores_survive_narrowing(kind):
    params = init_params(kind, 7, 3, 6, seed=2)
    loaded = decode_checkpoint(encode_checkpoint(params))
    triples = np.asarray([[0, 0, 1], [2, 1, 3], [6, 2, 6], [4, 0, 5]])
    np.testing.assert_allclose(
        score_triples(loaded, triples),
        score_triples(params, triples),
        rtol=1e-5,
        atol=1e-5,
    )


def test_header_layout():
    params = init_params(ModelKind.DISTMULT, 5, 2, 3, seed=0)
    data = encode_checkpoint(params)
    assert data[:4] == b"KGE1"
    header = np.frombuffer(data, dtype="<u4", count=4, offset=4).tolist()
    assert header == [ModelKind.DISTMULT.code, 5, 2, 3]
    assert len(data) == HEADER_SIZE + 4 * (5 * 3 + 2 * 3)


def test_checkpoint_path():
    path = checkpoint_path("out", ModelKind.TRANSE_L1)
    assert path.as_posix() == "out/TransE_l1.kge"
    assert metadata_path(path).as_posix() == "out/TransE_l1.kge.meta"


def test_truncated_by_one_byte():
    data = encode_checkpoint(init_params(ModelKind.COMPLEX, 4, 2, 4, seed=0))
    with pytest.raises(TruncatedPayload):
        decode_checkpoint(data[:-1])


def test_truncated_header():
    data = encode_checkpoint(init_params(ModelKind.COMPLEX, 4, 2, 4, seed=0))
    with pytest.raises(TruncatedPayload):
        decode_checkpoint(data[:10])


def test_missing_rows_is_a_size_mismatch():
    data = encode_checkpoint(init_params(ModelKind.DISTMULT, 4, 2, 4, seed=0))
    with pytest.raises(SizeMismatch) as exc:
        decode_checkpoint(data[:-16])
    assert exc.value.expected == 24
    assert exc.value.found == 20


def test_patched_kind_code():
    data = bytearray(
        encode_checkpoint(init_params(ModelKind.DISTMULT, 4, 2, 4, seed=0))
    )
    # RESCAL needs 4x4 relation matrices, the payload only has vectors
    data[4:8] = np.asarray([ModelKind.RESCAL.code], dtype="<u4").tobytes()
    with pytest.raises(SizeMismatch):
        decode_checkpoint(bytes(data))


def test_unknown_kind_code():
    data = bytearray(
        encode_checkpoint(init_params(ModelKind.DISTMULT, 2, 1, 2, seed=0))
    )
    data[4:8] = np.asarray([99], dtype="<u4").tobytes()
    with pytest.raises(CheckpointError):
        decode_checkpoint(bytes(data))


@pytest.mark.parametrize("data", [b"", b"PK\x03\x04" + bytes(40), b"KGE2"])
def test_bad_magic(data):
    with pytest.raises(BadMagic):
        decode_checkpoint(data)


def test_kind_mismatch():
    data = encode_checkpoint(init_params(ModelKind.ROTATE, 3, 1, 4, seed=0))
    with pytest.raises(KindMismatch):
        decode_checkpoint(data, ModelKind.TRANSE_L2)
    with pytest.raises(KindMismatch):
        decode_checkpoint(data, ModelKind.ROTATE, 8)
    assert decode_checkpoint(data, ModelKind.ROTATE, 4).dim == 4


def test_metadata_round_trip(tmp_path):
    params = init_params(ModelKind.DISTMULT, 3, 1, 2, seed=0)
    path = tmp_path / "DistMult.kge"
    save_checkpoint(params, path, {"model": "DistMult", "epoch": 7})
    assert read_metadata(path) == {"model": "DistMult", "epoch": "7"}
    assert not list(tmp_path.glob("*.tmp"))


def test_metadata_missing(tmp_path):
    assert read_metadata(tmp_path / "nothing.kge") == {}
