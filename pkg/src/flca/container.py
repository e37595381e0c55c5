"""Streaming block archive binding transform, classifier, and backend.

Layout (all integers little-endian):

  header   "FLCA" | version u8 | flags u8 | block_lines u32 | backend tag u8
           | name_len u8 | name bytes
           | if flag dict:  u32 length + dictionary bytes
           | if flag model: u32 length + model bytes
  block    variant u8 | basin u8 (0xFF none) | original u32 | payload u32
           | payload bytes | crc u32
  trailer  "ALCF" | block_count u64 | total_original u64

A block's `original` is the serialized transform data length (the backend's
input); its crc is CRC-32 of the block's raw pre-transform bytes, so decode
verifies end to end. The trailer's total counts raw bytes. Blocks never
reference each other, so any block decodes from the header state alone.

Memory stays bounded by the block size plus the dictionary sample: when a
dictionary is needed, the writer holds at most the first 64 Ki lines (or
32 MiB) before emitting anything.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from itertools import chain, islice

from .backend import BackendId, CompressedBlock, compress_block, decompress_block
from .errors import (CorruptArchive, CorruptBlock, CorruptModel, CorruptRecord,
                     InvalidVariant, NotAnArchive, UnexpectedEof)
from .nlca import (DICT_MAX_ENTRIES, DICT_SAMPLE_LINES, NlcaModel,
                   classify_block, deserialize_model, serialize_model)
from .tokenizer import detokenize, split_lines, tokenize
from .transform import (TokenDictionary, VARIANTS, build_dictionary,
                        decode_block, encode_line)

MAGIC = b"FLCA"
TRAILER_MAGIC = b"ALCF"
VERSION = 1
FLAG_MODEL = 1
FLAG_DICT = 2
DEFAULT_BLOCK_LINES = 256
DICT_SAMPLE_BYTES = 32 << 20

_HEAD = struct.Struct("<BBII")
_U32 = struct.Struct("<I")
_TRAILER = struct.Struct("<QQ")

_BACKEND_TAGS = {"store": 0, "lz": 1, "external": 2}
_BACKEND_KINDS = {v: k for k, v in _BACKEND_TAGS.items()}


@dataclass
class ArchiveSummary:
    blocks: int
    in_bytes: int
    out_bytes: int


@dataclass
class VerifyReport:
    blocks: int
    ok: bool
    first_error: str | None


def write_archive(src, dst, *, variant_id: int | None,
                  model: NlcaModel | None = None,
                  backend: BackendId = BackendId.lz(),
                  block_lines: int = DEFAULT_BLOCK_LINES,
                  embed_model: bool = True) -> ArchiveSummary:
    """Compress src (binary stream) into dst in one pass."""
    auto = variant_id is None
    if auto and model is None:
        raise ValueError("automatic variant selection needs a model")
    if not auto and not 0 <= variant_id <= 7:
        raise InvalidVariant(f"variant id must be 0..7, got {variant_id!r}")
    if block_lines < 1:
        raise ValueError("block_lines must be positive")

    pairs = split_lines(src)
    need_dict = auto or VARIANTS[variant_id].use_dict
    dct = None
    buffered: list[tuple[bytes, bytes]] = []
    if need_dict:
        sample_bytes = 0
        for pair in pairs:
            buffered.append(pair)
            sample_bytes += len(pair[0]) + len(pair[1])
            if len(buffered) >= DICT_SAMPLE_LINES or sample_bytes >= DICT_SAMPLE_BYTES:
                break
        dct = build_dictionary((tokenize(line) for line, _ in buffered),
                               DICT_MAX_ENTRIES)
    line_pairs = chain(buffered, pairs)

    out_bytes = 0

    def emit(data: bytes):
        nonlocal out_bytes
        dst.write(data)
        out_bytes += len(data)

    flags = 0
    if dct is not None:
        flags |= FLAG_DICT
    if auto and embed_model:
        flags |= FLAG_MODEL
    name = (backend.name or "").encode()
    header = bytearray()
    header += MAGIC
    header.append(VERSION)
    header.append(flags)
    header += _U32.pack(block_lines)
    header.append(_BACKEND_TAGS[backend.kind])
    header.append(len(name))
    header += name
    if flags & FLAG_DICT:
        blob = dct.serialize()
        header += _U32.pack(len(blob))
        header += blob
    if flags & FLAG_MODEL:
        blob = serialize_model(model)
        header += _U32.pack(len(blob))
        header += blob
    emit(bytes(header))

    blocks = 0
    in_bytes = 0
    fixed_variant = None if auto else VARIANTS[variant_id]

    while True:
        batch = list(islice(line_pairs, block_lines))
        if not batch:
            break
        lines = [tokenize(line, term) for line, term in batch]
        crc = 0
        raw_len = 0
        for line, term in batch:
            crc = zlib.crc32(line, crc)
            if term:
                crc = zlib.crc32(term, crc)
            raw_len += len(line) + len(term)
        if auto:
            basin, variant = classify_block(lines, dct, model)
        else:
            basin, variant = None, fixed_variant
        buf = bytearray()
        prev = None
        for tl in lines:
            encode_line(prev, tl, variant, dct, buf)
            prev = tl
        cb = compress_block(bytes(buf), backend)
        emit(_HEAD.pack(variant.id, 0xFF if basin is None else basin,
                        cb.original_len, len(cb.payload)))
        emit(cb.payload)
        emit(_U32.pack(crc))
        blocks += 1
        in_bytes += raw_len

    emit(TRAILER_MAGIC)
    emit(_TRAILER.pack(blocks, in_bytes))
    return ArchiveSummary(blocks, in_bytes, out_bytes)


class _Reader:
    __slots__ = ("stream", "consumed")

    def __init__(self, stream):
        self.stream = stream
        self.consumed = 0

    def read_exact(self, n: int) -> bytes:
        chunks = []
        remaining = n
        while remaining:
            chunk = self.stream.read(remaining)
            if not chunk:
                raise UnexpectedEof(
                    f"archive truncated ({remaining} bytes missing)")
            chunks.append(chunk)
            remaining -= len(chunk)
        self.consumed += n
        return chunks[0] if len(chunks) == 1 else b"".join(chunks)

    def at_eof(self) -> bool:
        return not self.stream.read(1)


def _read_header(reader: _Reader):
    try:
        magic = reader.read_exact(4)
    except UnexpectedEof:
        raise NotAnArchive("input shorter than an archive header") from None
    if magic != MAGIC:
        raise NotAnArchive("bad magic")
    version = reader.read_exact(1)[0]
    if version != VERSION:
        raise NotAnArchive(f"unsupported archive version {version}")
    flags = reader.read_exact(1)[0]
    block_lines = _U32.unpack(reader.read_exact(4))[0]
    tag = reader.read_exact(1)[0]
    kind = _BACKEND_KINDS.get(tag)
    if kind is None:
        raise CorruptArchive(f"unknown backend tag {tag}")
    name_len = reader.read_exact(1)[0]
    name = reader.read_exact(name_len).decode("utf-8", "replace") if name_len else None
    if kind == "external" and not name:
        raise CorruptArchive("external backend without a name")
    backend = BackendId(kind, name if kind == "external" else None)
    dct = None
    if flags & FLAG_DICT:
        blob_len = _U32.unpack(reader.read_exact(4))[0]
        blob = reader.read_exact(blob_len)
        try:
            dct = TokenDictionary.deserialize(blob)
        except CorruptRecord as exc:
            raise CorruptArchive(f"bad embedded dictionary: {exc}") from None
    model = None
    if flags & FLAG_MODEL:
        blob_len = _U32.unpack(reader.read_exact(4))[0]
        blob = reader.read_exact(blob_len)
        try:
            model = deserialize_model(blob)
        except CorruptModel as exc:
            raise CorruptArchive(f"bad embedded model: {exc}") from None
    return backend, block_lines, dct, model


def _iter_archive(reader: _Reader):
    """Yield decoded block bytes; validates structure and trailer."""
    backend, _block_lines, dct, _model = _read_header(reader)
    index = 0
    total_out = 0
    while True:
        first = reader.read_exact(4)
        if first == TRAILER_MAGIC:
            block_count, total_original = _TRAILER.unpack(reader.read_exact(16))
            if block_count != index:
                raise CorruptArchive(
                    f"trailer block count {block_count} != {index} read")
            if total_original != total_out:
                raise CorruptArchive(
                    f"trailer byte count {total_original} != {total_out} read")
            if not reader.at_eof():
                raise CorruptArchive("trailing bytes after archive trailer")
            return
        head = first + reader.read_exact(6)
        variant_id, basin, original_len, payload_len = _HEAD.unpack(head)
        if variant_id > 7:
            raise CorruptBlock(f"block {index}: bad variant {variant_id}",
                               index=index)
        payload = reader.read_exact(payload_len)
        crc_stored = _U32.unpack(reader.read_exact(4))[0]
        try:
            data = decompress_block(
                CompressedBlock(backend, original_len, payload))
            lines = decode_block(data, VARIANTS[variant_id], dct)
        except (CorruptBlock, CorruptRecord) as exc:
            raise CorruptBlock(f"block {index}: {exc}", index=index) from None
        raw = b"".join(detokenize(tl) for tl in lines)
        if zlib.crc32(raw) != crc_stored:
            raise CorruptBlock(f"block {index}: checksum mismatch", index=index)
        total_out += len(raw)
        index += 1
        yield raw


def read_archive(src, dst) -> ArchiveSummary:
    """Decode an archive stream into dst; bit-exact or an exception."""
    reader = _Reader(src)
    blocks = 0
    out = 0
    for raw in _iter_archive(reader):
        dst.write(raw)
        out += len(raw)
        blocks += 1
    return ArchiveSummary(blocks, reader.consumed, out)


def verify_archive(src) -> VerifyReport:
    """Decode into nothing, reporting integrity instead of raising."""
    reader = _Reader(src)
    blocks = 0
    try:
        for _ in _iter_archive(reader):
            blocks += 1
    except Exception as exc:  # report, never raise
        return VerifyReport(blocks, False, f"{type(exc).__name__}: {exc}")
    return VerifyReport(blocks, True, None)
