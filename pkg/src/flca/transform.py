"""Line-delta transform: encode each tokenized line against its predecessor.

Eight variants toggle three independent features:

  bit 0  dictionary substitution of frequent token texts
  bit 1  previous-line references (whole-token copy runs, shared prefixes)
  bit 2  typed field coding (numeric/temporal deltas, raw IPv4 octets)

Variant 0 is a pure tokenization passthrough, variant 7 enables everything.
Encoding is canonical and greedy: at each token position the first
applicable op wins, in the order copy-run, field-delta, dictionary
reference, prefix-match, literal. Decoding the ops against the previous
line reproduces the original bytes exactly, for every input.

Wire format of one record (ops for one line): op tag byte, then varint
counts/lengths and length-prefixed byte payloads; the record ends with an
end-of-line op carrying the terminator.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Union

from .errors import CorruptRecord, InternalError, InvalidVariant
from .tokenizer import (Token, TokenClass, TokenizedLine, _MONTHS,
                        _parse_date)
from .wire import (read_bytes, read_svarint, read_uvarint, write_bytes,
                   write_svarint, write_uvarint)

OP_COPY = 0
OP_PREFIX = 1
OP_DICT = 2
OP_FIELD = 3
OP_LIT = 4
OP_EOL = 5

_EOL_EMPTY = 0
_EOL_LF = 1
_EOL_CRLF = 2
_EOL_OTHER = 3

FIELD_CLASSES = frozenset((TokenClass.TIMESTAMP, TokenClass.DATE,
                           TokenClass.TIME, TokenClass.IPV4,
                           TokenClass.DECIMAL))

MIN_PREFIX = 2
DICT_MIN_LEN = 2
DICT_MIN_FREQ = 4

_SECONDS_PER_DAY = 86400


@dataclass(frozen=True)
class TransformVariant:
    id: int
    use_dict: bool
    line_ref: bool
    field_code: bool


def variant_from_id(vid: int) -> TransformVariant:
    if not isinstance(vid, int) or not 0 <= vid <= 7:
        raise InvalidVariant(f"variant id must be 0..7, got {vid!r}")
    return TransformVariant(vid, bool(vid & 1), bool(vid & 2), bool(vid & 4))


VARIANTS = tuple(variant_from_id(i) for i in range(8))


class TokenDictionary:
    """Frequent token texts mapped to dense codes."""

    __slots__ = ("entries", "index")

    def __init__(self, entries: list[bytes]):
        self.entries = entries
        self.index = {text: i for i, text in enumerate(entries)}
        if len(self.index) != len(entries):
            raise ValueError("duplicate dictionary entries")

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        return isinstance(other, TokenDictionary) and self.entries == other.entries

    def serialize(self) -> bytes:
        buf = bytearray()
        write_uvarint(buf, len(self.entries))
        for text in self.entries:
            write_bytes(buf, text)
        return bytes(buf)

    @classmethod
    def deserialize(cls, data: bytes) -> "TokenDictionary":
        count, pos = read_uvarint(data, 0)
        entries = []
        for _ in range(count):
            text, pos = read_bytes(data, pos)
            entries.append(text)
        if pos != len(data):
            raise CorruptRecord("trailing bytes after dictionary")
        return cls(entries)


def build_dictionary(sample: Iterable[TokenizedLine], max_entries: int) -> TokenDictionary:
    """Most frequent token texts (len >= 2, freq >= 4), deterministic order."""
    counts: Counter[bytes] = Counter()
    for line in sample:
        counts.update(t.text for t in line.tokens)
    candidates = [(text, n) for text, n in counts.items()
                  if n >= DICT_MIN_FREQ and len(text) >= DICT_MIN_LEN]
    candidates.sort(key=lambda item: (-item[1], item[0]))
    return TokenDictionary([text for text, _ in candidates[:max_entries]])


# --- typed field payloads ---------------------------------------------------

def _parse_time(text: bytes) -> tuple[int, bytes | None]:
    seconds = (int(text[0:2]) * 3600 + int(text[3:5]) * 60 + int(text[6:8]))
    frac = text[9:] if len(text) > 8 else None
    return seconds, frac


def _format_time(seconds: int, frac: bytes | None) -> bytes:
    if not 0 <= seconds < _SECONDS_PER_DAY:
        raise CorruptRecord("time delta out of range")
    h, rem = divmod(seconds, 3600)
    m, s = divmod(rem, 60)
    text = b"%02d:%02d:%02d" % (h, m, s)
    return text + b"." + frac if frac is not None else text


def _date_format(text: bytes) -> int:
    return 1 if text[2:3] == b"/" else 0


def _format_date(ordinal: int, fmt: int) -> bytes:
    try:
        import datetime
        d = datetime.date.fromordinal(ordinal)
    except (ValueError, OverflowError):
        raise CorruptRecord("date delta out of range") from None
    if fmt:
        return b"%02d/%s/%04d" % (d.day, _MONTHS[d.month - 1], d.year)
    return b"%04d-%02d-%02d" % (d.year, d.month, d.day)


def _split_timestamp(text: bytes) -> tuple[bytes, int, bytes]:
    date_part = text[:11] if text[2:3] == b"/" else text[:10]
    sep = text[len(date_part)]
    return date_part, sep, text[len(date_part) + 1:]


def encode_field(prev_tok: Token, cur_tok: Token) -> bytes:
    """Delta-encode a typed token against its same-class predecessor."""
    cls = cur_tok.cls
    if prev_tok.cls is not cls or cls not in FIELD_CLASSES:
        raise InternalError("field coding requires matching typed classes")
    buf = bytearray()
    pt, ct = prev_tok.text, cur_tok.text
    if cls is TokenClass.DECIMAL:
        pv, cv = int(pt), int(ct)
        if pv < 2 ** 63 and cv < 2 ** 63 and len(pt) == len(ct):
            buf.append(0)
            write_uvarint(buf, len(ct))
            write_svarint(buf, cv - pv)
        else:
            buf.append(1)
            write_bytes(buf, ct)
    elif cls is TokenClass.IPV4:
        buf += bytes(int(o) for o in ct.split(b"."))
    elif cls is TokenClass.TIME:
        psec, _ = _parse_time(pt)
        csec, frac = _parse_time(ct)
        buf.append(1 if frac is not None else 0)
        write_svarint(buf, csec - psec)
        if frac is not None:
            write_bytes(buf, frac)
    elif cls is TokenClass.DATE:
        buf.append(_date_format(ct))
        write_svarint(buf, _parse_date(ct) - _parse_date(pt))
    else:  # TIMESTAMP
        pdate, _, ptime = _split_timestamp(pt)
        cdate, sep, ctime = _split_timestamp(ct)
        pval = _parse_date(pdate) * _SECONDS_PER_DAY + _parse_time(ptime)[0]
        csec, frac = _parse_time(ctime)
        cval = _parse_date(cdate) * _SECONDS_PER_DAY + csec
        buf.append(_date_format(cdate) | (2 if frac is not None else 0))
        buf.append(sep)
        write_svarint(buf, cval - pval)
        if frac is not None:
            write_bytes(buf, frac)
    return bytes(buf)


def decode_field(prev_tok: Token, payload: bytes) -> Token:
    """Exact inverse of encode_field."""
    cls = prev_tok.cls
    if cls not in FIELD_CLASSES:
        raise CorruptRecord("field delta against untyped token")
    if not payload:
        raise CorruptRecord("empty field payload")
    pos = 0
    if cls is TokenClass.DECIMAL:
        mode = payload[pos]
        pos += 1
        if mode == 0:
            width, pos = read_uvarint(payload, pos)
            delta, pos = read_svarint(payload, pos)
            value = int(prev_tok.text) + delta
            if value < 0:
                raise CorruptRecord("decimal delta underflow")
            text = b"%0*d" % (width, value)
            if len(text) != width:
                raise CorruptRecord("decimal width mismatch")
        elif mode == 1:
            text, pos = read_bytes(payload, pos)
        else:
            raise CorruptRecord("bad decimal mode")
    elif cls is TokenClass.IPV4:
        if len(payload) != 4:
            raise CorruptRecord("bad IPv4 payload length")
        text = b".".join(b"%d" % o for o in payload)
        pos = 4
    elif cls is TokenClass.TIME:
        flags = payload[pos]
        pos += 1
        delta, pos = read_svarint(payload, pos)
        frac = None
        if flags & 1:
            frac, pos = read_bytes(payload, pos)
        text = _format_time(_parse_time(prev_tok.text)[0] + delta, frac)
    elif cls is TokenClass.DATE:
        fmt = payload[pos]
        pos += 1
        delta, pos = read_svarint(payload, pos)
        text = _format_date(_parse_date(prev_tok.text) + delta, fmt)
    else:  # TIMESTAMP
        flags = payload[pos]
        sep = payload[pos + 1:pos + 2]
        if not sep:
            raise CorruptRecord("truncated timestamp payload")
        pos += 2
        delta, pos = read_svarint(payload, pos)
        frac = None
        if flags & 2:
            frac, pos = read_bytes(payload, pos)
        pdate, _, ptime = _split_timestamp(prev_tok.text)
        pval = _parse_date(pdate) * _SECONDS_PER_DAY + _parse_time(ptime)[0]
        day, sec = divmod(pval + delta, _SECONDS_PER_DAY)
        text = _format_date(day, flags & 1) + sep + _format_time(sec, frac)
    if pos != len(payload):
        raise CorruptRecord("trailing bytes in field payload")
    tok = Token(text, cls)
    return tok


# --- op introspection types --------------------------------------------------

@dataclass(frozen=True)
class CopyRun:
    count: int


@dataclass(frozen=True)
class PrefixMatch:
    prefix_len: int
    suffix: bytes


@dataclass(frozen=True)
class DictRef:
    code: int


@dataclass(frozen=True)
class FieldDelta:
    cls: TokenClass
    payload: bytes


@dataclass(frozen=True)
class Literal:
    data: bytes


@dataclass(frozen=True)
class EndOfLine:
    terminator: bytes


TokenOp = Union[CopyRun, PrefixMatch, DictRef, FieldDelta, Literal, EndOfLine]


# --- encode / decode ---------------------------------------------------------

def _common_prefix_len(a: bytes, b: bytes) -> int:
    limit = min(len(a), len(b))
    i = 0
    while i < limit and a[i] == b[i]:
        i += 1
    return i


def _write_eol(buf: bytearray, terminator: bytes) -> None:
    buf.append(OP_EOL)
    if terminator == b"\n":
        buf.append(_EOL_LF)
    elif terminator == b"":
        buf.append(_EOL_EMPTY)
    elif terminator == b"\r\n":
        buf.append(_EOL_CRLF)
    else:
        buf.append(_EOL_OTHER)
        write_bytes(buf, terminator)


def encode_line(prev: TokenizedLine | None, cur: TokenizedLine,
                variant: TransformVariant, dct: TokenDictionary | None = None,
                out: bytearray | None = None) -> bytes | None:
    """Append one canonical record for cur to out (or return it)."""
    if variant.use_dict and dct is None:
        raise InternalError("dictionary-enabled variant needs a dictionary")
    buf = bytearray() if out is None else out
    ptoks = prev.tokens if prev is not None else ()
    ctoks = cur.tokens
    np_, nc = len(ptoks), len(ctoks)
    line_ref = variant.line_ref
    field_code = variant.field_code
    dict_index = dct.index if variant.use_dict and dct is not None else None

    i = 0
    while i < nc:
        tok = ctoks[i]
        text = tok.text
        if i < np_:
            ptext = ptoks[i].text
            if line_ref and ptext == text:
                run = i + 1
                while run < nc and run < np_ and ptoks[run].text == ctoks[run].text:
                    run += 1
                buf.append(OP_COPY)
                write_uvarint(buf, run - i)
                i = run
                continue
            if field_code:
                cls = tok.cls
                if cls in FIELD_CLASSES and ptoks[i].cls is cls:
                    payload = encode_field(ptoks[i], tok)
                    buf.append(OP_FIELD)
                    buf.append(cls)
                    write_bytes(buf, payload)
                    i += 1
                    continue
        if dict_index is not None:
            code = dict_index.get(text)
            if code is not None:
                buf.append(OP_DICT)
                write_uvarint(buf, code)
                i += 1
                continue
        if line_ref and i < np_:
            plen = _common_prefix_len(ptoks[i].text, text)
            if plen >= MIN_PREFIX:
                buf.append(OP_PREFIX)
                write_uvarint(buf, plen)
                write_bytes(buf, text[plen:])
                i += 1
                continue
        buf.append(OP_LIT)
        write_bytes(buf, text)
        i += 1

    _write_eol(buf, cur.terminator)
    return bytes(buf) if out is None else None


def decode_line(prev: TokenizedLine | None, data, pos: int,
                variant: TransformVariant, dct: TokenDictionary | None = None
                ) -> tuple[TokenizedLine, int]:
    """Decode one record starting at pos; returns the line and the new pos."""
    ptoks = prev.tokens if prev is not None else ()
    np_ = len(ptoks)
    tokens: list[Token] = []
    line_ref = variant.line_ref
    field_code = variant.field_code
    entries = dct.entries if dct is not None else None
    use_dict = variant.use_dict
    n = len(data)
    i = 0

    while True:
        if pos >= n:
            raise CorruptRecord("record ends without end-of-line op")
        tag = data[pos]
        pos += 1
        if tag == OP_COPY:
            if not line_ref:
                raise CorruptRecord("copy run not permitted by variant")
            count, pos = read_uvarint(data, pos)
            if count < 1 or i + count > np_:
                raise CorruptRecord("copy run past previous line")
            tokens.extend(ptoks[i:i + count])
            i += count
        elif tag == OP_PREFIX:
            if not line_ref:
                raise CorruptRecord("prefix match not permitted by variant")
            plen, pos = read_uvarint(data, pos)
            suffix, pos = read_bytes(data, pos)
            if i >= np_ or plen < 1 or plen > len(ptoks[i].text):
                raise CorruptRecord("prefix match out of range")
            tokens.append(Token(ptoks[i].text[:plen] + suffix))
            i += 1
        elif tag == OP_DICT:
            if not use_dict:
                raise CorruptRecord("dictionary ref not permitted by variant")
            code, pos = read_uvarint(data, pos)
            if entries is None or code >= len(entries):
                raise CorruptRecord("dictionary code out of range")
            tokens.append(Token(entries[code]))
            i += 1
        elif tag == OP_FIELD:
            if not field_code:
                raise CorruptRecord("field delta not permitted by variant")
            if pos >= n:
                raise CorruptRecord("truncated field op")
            cls_byte = data[pos]
            pos += 1
            payload, pos = read_bytes(data, pos)
            if i >= np_:
                raise CorruptRecord("field delta past previous line")
            ptok = ptoks[i]
            if ptok.cls != cls_byte:
                raise CorruptRecord("field delta class mismatch")
            tokens.append(decode_field(ptok, payload))
            i += 1
        elif tag == OP_LIT:
            text, pos = read_bytes(data, pos)
            if not text:
                raise CorruptRecord("empty literal token")
            tokens.append(Token(text))
            i += 1
        elif tag == OP_EOL:
            if pos >= n:
                raise CorruptRecord("truncated end-of-line op")
            kind = data[pos]
            pos += 1
            if kind == _EOL_LF:
                term = b"\n"
            elif kind == _EOL_EMPTY:
                term = b""
            elif kind == _EOL_CRLF:
                term = b"\r\n"
            elif kind == _EOL_OTHER:
                term, pos = read_bytes(data, pos)
            else:
                raise CorruptRecord("bad end-of-line kind")
            return TokenizedLine(tokens, term), pos
        else:
            raise CorruptRecord(f"unknown op tag {tag}")


def record_ops(data, pos: int = 0) -> tuple[list[TokenOp], int]:
    """Parse one record into op objects (for inspection and tests)."""
    ops: list[TokenOp] = []
    n = len(data)
    while True:
        if pos >= n:
            raise CorruptRecord("record ends without end-of-line op")
        tag = data[pos]
        pos += 1
        if tag == OP_COPY:
            count, pos = read_uvarint(data, pos)
            ops.append(CopyRun(count))
        elif tag == OP_PREFIX:
            plen, pos = read_uvarint(data, pos)
            suffix, pos = read_bytes(data, pos)
            ops.append(PrefixMatch(plen, suffix))
        elif tag == OP_DICT:
            code, pos = read_uvarint(data, pos)
            ops.append(DictRef(code))
        elif tag == OP_FIELD:
            if pos >= n:
                raise CorruptRecord("truncated field op")
            cls_byte = data[pos]
            pos += 1
            payload, pos = read_bytes(data, pos)
            try:
                cls = TokenClass(cls_byte)
            except ValueError:
                raise CorruptRecord("bad field class byte") from None
            ops.append(FieldDelta(cls, payload))
        elif tag == OP_LIT:
            text, pos = read_bytes(data, pos)
            ops.append(Literal(text))
        elif tag == OP_EOL:
            if pos >= n:
                raise CorruptRecord("truncated end-of-line op")
            kind = data[pos]
            pos += 1
            if kind == _EOL_LF:
                term = b"\n"
            elif kind == _EOL_EMPTY:
                term = b""
            elif kind == _EOL_CRLF:
                term = b"\r\n"
            elif kind == _EOL_OTHER:
                term, pos = read_bytes(data, pos)
            else:
                raise CorruptRecord("bad end-of-line kind")
            ops.append(EndOfLine(term))
            return ops, pos
        else:
            raise CorruptRecord(f"unknown op tag {tag}")


def encode_block(lines: list[TokenizedLine], variant: TransformVariant,
                 dct: TokenDictionary | None = None) -> bytes:
    buf = bytearray()
    prev = None
    for line in lines:
        encode_line(prev, line, variant, dct, buf)
        prev = line
    return bytes(buf)


def decode_block(data, variant: TransformVariant,
                 dct: TokenDictionary | None = None) -> list[TokenizedLine]:
    lines = []
    prev = None
    pos = 0
    n = len(data)
    while pos < n:
        line, pos = decode_line(prev, data, pos, variant, dct)
        lines.append(line)
        prev = line
    return lines
