"""Entropy-coding backends applied to serialized block payloads.

Three kinds:

  store     identity (payload == input)
  lz        built-in greedy LZ parse (64 KiB window, matches 4..273,
            hash-chain matcher) coded with an adaptive binary range coder
            (32-bit low/range; per-context bit counts start at 1 and are
            halved when their sum reaches 2^16)
  external  pipe through a user-configured filter command; the command
            reads raw bytes on stdin and writes coded bytes on stdout,
            exit status 0 on success. Commands come from the environment:
            FLCA_EXT_<NAME>_C compresses, FLCA_EXT_<NAME>_D decompresses.

The lz bitstream is only guaranteed to round-trip through this module;
blocks record which backend produced them.
"""

from __future__ import annotations

import os
import shlex
import subprocess
from dataclasses import dataclass

from .errors import BackendError, CorruptBlock

WINDOW = 1 << 16
MIN_MATCH = 4
MAX_MATCH = 273
_HASH_BITS = 15
_HASH_SIZE = 1 << _HASH_BITS
_MAX_CHAIN = 128
_WMASK = WINDOW - 1
_TOP = 1 << 24
_MASK32 = 0xFFFFFFFF
_HALVE_AT = 1 << 16

# Lengths and distances go out as an adaptive slot (the value's bit length,
# coded through a small bit tree) followed by the remaining bits at a fixed
# probability of one half. Small trees adapt within a block.
_LEN_SLOT_BITS = 4    # slots 0..9 for length - MIN_MATCH in 0..269
_DIST_SLOT_BITS = 5   # slots 0..16 for distance - 1 in 0..65535


@dataclass(frozen=True)
class BackendId:
    kind: str                 # "store" | "lz" | "external"
    name: str | None = None   # filter name for external backends

    @classmethod
    def store(cls) -> "BackendId":
        return cls("store")

    @classmethod
    def lz(cls) -> "BackendId":
        return cls("lz")

    @classmethod
    def external(cls, name: str) -> "BackendId":
        if not name:
            raise ValueError("external backend needs a name")
        return cls("external", name)

    @classmethod
    def parse(cls, spec: str) -> "BackendId":
        if spec == "store":
            return cls.store()
        if spec == "lz":
            return cls.lz()
        if spec.startswith("ext:"):
            return cls.external(spec[4:])
        raise ValueError(f"unknown backend {spec!r}")

    def __str__(self) -> str:
        return f"ext:{self.name}" if self.kind == "external" else self.kind


@dataclass(frozen=True)
class CompressedBlock:
    backend: BackendId
    original_len: int
    payload: bytes


class _RangeEncoder:
    """Carry-aware binary range encoder (LZMA-style byte shifting)."""

    __slots__ = ("low", "range", "cache", "cache_size", "out")

    def __init__(self):
        self.low = 0
        self.range = _MASK32
        self.cache = 0
        self.cache_size = 1
        self.out = bytearray()

    def _shift_low(self):
        low = self.low
        if low < 0xFF000000 or low > _MASK32:
            carry = low >> 32
            out = self.out
            out.append((self.cache + carry) & 0xFF)
            filler = (0xFF + carry) & 0xFF
            for _ in range(self.cache_size - 1):
                out.append(filler)
            self.cache = (low >> 24) & 0xFF
            self.cache_size = 1
        else:
            self.cache_size += 1
        self.low = (low << 8) & _MASK32

    def encode_bit(self, m0, m1, idx, bit):
        c0 = m0[idx]
        c1 = m1[idx]
        bound = (self.range // (c0 + c1)) * c0
        if bit:
            self.low += bound
            self.range -= bound
            c1 += 1
        else:
            self.range = bound
            c0 += 1
        if c0 + c1 >= _HALVE_AT:
            c0 = (c0 + 1) >> 1
            c1 = (c1 + 1) >> 1
        m0[idx] = c0
        m1[idx] = c1
        while self.range < _TOP:
            self._shift_low()
            self.range = (self.range << 8) & _MASK32

    def encode_tree(self, m0, m1, nbits, value):
        node = 1
        for shift in range(nbits - 1, -1, -1):
            bit = (value >> shift) & 1
            self.encode_bit(m0, m1, node, bit)
            node = (node << 1) | bit

    def encode_direct(self, value, nbits):
        for shift in range(nbits - 1, -1, -1):
            self.range >>= 1
            if (value >> shift) & 1:
                self.low += self.range
            while self.range < _TOP:
                self._shift_low()
                self.range = (self.range << 8) & _MASK32

    def finish(self) -> bytes:
        for _ in range(5):
            self._shift_low()
        return bytes(self.out)


class _RangeDecoder:
    __slots__ = ("data", "pos", "code", "range")

    def __init__(self, data):
        self.data = data
        if len(data) < 5:
            raise CorruptBlock("coded payload too short")
        self.pos = 5
        self.code = int.from_bytes(data[1:5], "big")
        self.range = _MASK32

    def _next_byte(self):
        pos = self.pos
        if pos >= len(self.data):
            raise CorruptBlock("coded payload truncated")
        self.pos = pos + 1
        return self.data[pos]

    def decode_bit(self, m0, m1, idx):
        c0 = m0[idx]
        c1 = m1[idx]
        bound = (self.range // (c0 + c1)) * c0
        if self.code < bound:
            bit = 0
            self.range = bound
            c0 += 1
        else:
            bit = 1
            self.code -= bound
            self.range -= bound
            c1 += 1
        if c0 + c1 >= _HALVE_AT:
            c0 = (c0 + 1) >> 1
            c1 = (c1 + 1) >> 1
        m0[idx] = c0
        m1[idx] = c1
        while self.range < _TOP:
            self.code = ((self.code << 8) | self._next_byte()) & _MASK32
            self.range = (self.range << 8) & _MASK32
        return bit

    def decode_tree(self, m0, m1, nbits):
        node = 1
        for _ in range(nbits):
            node = (node << 1) | self.decode_bit(m0, m1, node)
        return node - (1 << nbits)

    def decode_direct(self, nbits):
        value = 0
        for _ in range(nbits):
            self.range >>= 1
            if self.code >= self.range:
                self.code -= self.range
                value = (value << 1) | 1
            else:
                value <<= 1
            while self.range < _TOP:
                self.code = ((self.code << 8) | self._next_byte()) & _MASK32
                self.range = (self.range << 8) & _MASK32
        return value


def _new_models():
    return (
        [1, 1], [1, 1],                                        # symbol kind
        [1] * 256, [1] * 256,                                  # literal bits
        [1] * (1 << _LEN_SLOT_BITS), [1] * (1 << _LEN_SLOT_BITS),    # length slot
        [1] * (1 << _DIST_SLOT_BITS), [1] * (1 << _DIST_SLOT_BITS),  # distance slot
    )


def _encode_slotted(enc, m0, m1, slot_bits, value):
    slot = value.bit_length()
    enc.encode_tree(m0, m1, slot_bits, slot)
    if slot > 1:
        enc.encode_direct(value - (1 << (slot - 1)), slot - 1)


def _decode_slotted(dec, m0, m1, slot_bits, max_slot):
    slot = dec.decode_tree(m0, m1, slot_bits)
    if slot > max_slot:
        raise CorruptBlock("value slot out of range")
    if slot == 0:
        return 0
    if slot == 1:
        return 1
    return (1 << (slot - 1)) | dec.decode_direct(slot - 1)


def _match_length(data, a, b, limit):
    l = 0
    while l + 16 <= limit and data[a + l:a + l + 16] == data[b + l:b + l + 16]:
        l += 16
    while l < limit and data[a + l] == data[b + l]:
        l += 1
    return l


def _lz_compress(data: bytes) -> bytes:
    enc = _RangeEncoder()
    kind0, kind1, lit0, lit1, len0, len1, dist0, dist1 = _new_models()
    encode_bit = enc.encode_bit
    encode_tree = enc.encode_tree

    head = [-1] * _HASH_SIZE
    prev = [0] * WINDOW
    n = len(data)
    pos = 0
    hash_limit = n - MIN_MATCH

    while pos < n:
        best_len = 0
        best_dist = 0
        if pos <= hash_limit:
            h = ((data[pos] | (data[pos + 1] << 8) | (data[pos + 2] << 16)
                  | (data[pos + 3] << 24)) * 0x9E3779B1 & _MASK32) >> 17
            cand = head[h]
            chain = _MAX_CHAIN
            limit = n - pos
            if limit > MAX_MATCH:
                limit = MAX_MATCH
            while cand >= 0 and chain > 0:
                if pos - cand > WINDOW:
                    break
                if best_len >= limit:
                    break
                if data[cand + best_len] == data[pos + best_len]:
                    length = _match_length(data, cand, pos, limit)
                    if length > best_len:
                        best_len = length
                        best_dist = pos - cand
                cand = prev[cand & _WMASK]
                chain -= 1

        if best_len >= MIN_MATCH:
            encode_bit(kind0, kind1, 0, 1)
            _encode_slotted(enc, len0, len1, _LEN_SLOT_BITS, best_len - MIN_MATCH)
            _encode_slotted(enc, dist0, dist1, _DIST_SLOT_BITS, best_dist - 1)
            # Long runs only index a sample of positions; any policy is valid.
            end = pos + best_len
            step = 1 if best_len <= 48 else 8
            p = pos
            while p < end and p <= hash_limit:
                h = ((data[p] | (data[p + 1] << 8) | (data[p + 2] << 16)
                      | (data[p + 3] << 24)) * 0x9E3779B1 & _MASK32) >> 17
                prev[p & _WMASK] = head[h]
                head[h] = p
                p += step if p - pos >= 16 else 1
            pos = end
        else:
            byte = data[pos]
            encode_bit(kind0, kind1, 0, 0)
            encode_tree(lit0, lit1, 8, byte)
            if pos <= hash_limit:
                h = ((data[pos] | (data[pos + 1] << 8) | (data[pos + 2] << 16)
                      | (data[pos + 3] << 24)) * 0x9E3779B1 & _MASK32) >> 17
                prev[pos & _WMASK] = head[h]
                head[h] = pos
            pos += 1

    return enc.finish()


def _lz_decompress(payload: bytes, original_len: int) -> bytes:
    if original_len == 0:
        return b""
    dec = _RangeDecoder(payload)
    kind0, kind1, lit0, lit1, len0, len1, dist0, dist1 = _new_models()
    decode_bit = dec.decode_bit
    decode_tree = dec.decode_tree

    out = bytearray()
    produced = 0
    while produced < original_len:
        if decode_bit(kind0, kind1, 0):
            length = _decode_slotted(dec, len0, len1, _LEN_SLOT_BITS, 9) + MIN_MATCH
            if length > MAX_MATCH:
                raise CorruptBlock("match length out of range")
            dist = _decode_slotted(dec, dist0, dist1, _DIST_SLOT_BITS, 16) + 1
            if dist > produced:
                raise CorruptBlock("match distance before stream start")
            if produced + length > original_len:
                raise CorruptBlock("match overruns declared length")
            src = produced - dist
            if dist == 1:
                out += out[-1:] * length
            elif dist >= length:
                out += out[src:src + length]
            else:
                for k in range(length):
                    out.append(out[src + k])
            produced += length
        else:
            out.append(decode_tree(lit0, lit1, 8))
            produced += 1
    return bytes(out)


def _filter_command(name: str, compressing: bool) -> list[str]:
    key = f"FLCA_EXT_{name.upper()}_{'C' if compressing else 'D'}"
    cmd = os.environ.get(key)
    if not cmd:
        raise BackendError(f"external filter {name!r} not configured ({key} unset)")
    return shlex.split(cmd)


def _run_filter(cmd: list[str], data: bytes) -> bytes:
    try:
        proc = subprocess.run(cmd, input=data, stdout=subprocess.PIPE,
                              stderr=subprocess.PIPE)
    except OSError as exc:
        raise BackendError(f"cannot run {cmd[0]!r}: {exc}") from exc
    if proc.returncode != 0:
        raise BackendError(
            f"filter {cmd[0]!r} exited with status {proc.returncode}",
            exit_status=proc.returncode)
    return proc.stdout


def compress_block(data: bytes, backend: BackendId) -> CompressedBlock:
    if len(data) >= 1 << 32:
        raise ValueError("block too large")
    if backend.kind == "store":
        payload = bytes(data)
    elif backend.kind == "lz":
        payload = _lz_compress(data)
    elif backend.kind == "external":
        payload = _run_filter(_filter_command(backend.name, True), data)
    else:
        raise ValueError(f"unknown backend kind {backend.kind!r}")
    return CompressedBlock(backend, len(data), payload)


def decompress_block(cb: CompressedBlock) -> bytes:
    backend = cb.backend
    if backend.kind == "store":
        if len(cb.payload) != cb.original_len:
            raise CorruptBlock("stored payload length mismatch")
        return cb.payload
    if backend.kind == "lz":
        return _lz_decompress(cb.payload, cb.original_len)
    if backend.kind == "external":
        data = _run_filter(_filter_command(backend.name, False), cb.payload)
        if len(data) != cb.original_len:
            raise CorruptBlock("external filter length mismatch")
        return data
    raise ValueError(f"unknown backend kind {backend.kind!r}")
