"""LEB128-style varints and zigzag helpers used by the wire formats."""

from .errors import CorruptRecord


def write_uvarint(buf: bytearray, value: int) -> None:
    if value < 0:
        raise ValueError("uvarint cannot encode negative values")
    while value >= 0x80:
        buf.append((value & 0x7F) | 0x80)
        value >>= 7
    buf.append(value)


def read_uvarint(data, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    n = len(data)
    while True:
        if pos >= n:
            raise CorruptRecord("truncated varint")
        b = data[pos]
        pos += 1
        result |= (b & 0x7F) << shift
        if not b & 0x80:
            return result, pos
        shift += 7
        if shift > 70:
            raise CorruptRecord("varint too long")


def zigzag(n: int) -> int:
    return (n << 1) if n >= 0 else ((-n) << 1) - 1


def unzigzag(z: int) -> int:
    return (z >> 1) if not z & 1 else -((z + 1) >> 1)


def write_svarint(buf: bytearray, value: int) -> None:
    write_uvarint(buf, zigzag(value))


def read_svarint(data, pos: int) -> tuple[int, int]:
    z, pos = read_uvarint(data, pos)
    return unzigzag(z), pos


def write_bytes(buf: bytearray, payload: bytes) -> None:
    write_uvarint(buf, len(payload))
    buf += payload


def read_bytes(data, pos: int) -> tuple[bytes, int]:
    length, pos = read_uvarint(data, pos)
    end = pos + length
    if end > len(data):
        raise CorruptRecord("truncated byte payload")
    return bytes(data[pos:end]), end
