"""Byte-exact tokenization of log lines into typed tokens.

A line is split into alternating runs of separators (spaces/tabs) and
non-separator fields. Each field is classified as a whole; a field that is
not entirely one of the typed forms falls through to Other, so punctuation
glues its neighbours into a single Other token. Concatenating the token
texts (plus the line terminator) always reproduces the input bytes.

Token classes, most specific first:

  Timestamp  date + one of 'T' ':' '_' + time     2024-03-17T12:00:01
  Date       YYYY-MM-DD or DD/Mon/YYYY            17/Mar/2024
  Time       HH:MM:SS with optional .fraction     12:00:01.250
  IPv4       four 0..255 octets, no leading zeros 10.0.0.1
  Hex        0x-prefixed, or >=4 hex digits of    0x1F, deadbeef
             which at least one is a letter
  Decimal    digits only                          00404
  Word       ASCII letters only                   GET
  Separator  run of spaces and tabs
  Other      anything else (the catch-all)

Timestamps never span a space: a space-separated date and time stay two
tokens, matching how separators are kept as tokens in their own right.
Everything is byte-oriented; invalid UTF-8 is just more bytes.
"""

from __future__ import annotations

import datetime
import re
from enum import IntEnum
from typing import Iterable, Iterator


class TokenClass(IntEnum):
    TIMESTAMP = 0
    DATE = 1
    TIME = 2
    IPV4 = 3
    DECIMAL = 4
    HEX = 5
    WORD = 6
    SEPARATOR = 7
    OTHER = 8


_DATE = rb"\d{4}-\d{2}-\d{2}|\d{2}/(?:Jan|Feb|Mar|Apr|May|Jun|Jul|Aug|Sep|Oct|Nov|Dec)/\d{4}"
_TIME = rb"(?:[01]\d|2[0-3]):[0-5]\d:[0-5]\d(?:\.\d+)?"
_OCTET = rb"(?:25[0-5]|2[0-4]\d|1\d\d|[1-9]\d|\d)"

_CLASSIFY_RE = re.compile(
    rb"(?P<ts>(?:%s)[T:_](?:%s))"
    rb"|(?P<date>%s)"
    rb"|(?P<time>%s)"
    rb"|(?P<ip>%s(?:\.%s){3})"
    rb"|(?P<hex>0[xX][0-9a-fA-F]+|(?=[0-9a-fA-F]*[a-fA-F])[0-9a-fA-F]{4,})"
    rb"|(?P<dec>\d+)"
    rb"|(?P<word>[A-Za-z]+)"
    rb"|(?P<sep>[ \t]+)"
    % (_DATE, _TIME, _DATE, _TIME, _OCTET, _OCTET)
)

_GROUP_CLASS = {
    "ts": TokenClass.TIMESTAMP,
    "date": TokenClass.DATE,
    "time": TokenClass.TIME,
    "ip": TokenClass.IPV4,
    "hex": TokenClass.HEX,
    "dec": TokenClass.DECIMAL,
    "word": TokenClass.WORD,
    "sep": TokenClass.SEPARATOR,
}

_MONTHS = (b"Jan", b"Feb", b"Mar", b"Apr", b"May", b"Jun",
           b"Jul", b"Aug", b"Sep", b"Oct", b"Nov", b"Dec")
_MONTH_NUM = {m: i + 1 for i, m in enumerate(_MONTHS)}

_TOKEN_RE = re.compile(rb"[ \t]+|[^ \t]+")
_SEP_BYTES = b" \t"


def _parse_date(text: bytes) -> int | None:
    """Ordinal day for a regex-shaped date, or None if not a real date."""
    try:
        if text[4:5] == b"-":
            d = datetime.date(int(text[0:4]), int(text[5:7]), int(text[8:10]))
        else:
            d = datetime.date(int(text[7:11]), _MONTH_NUM[text[3:6]], int(text[0:2]))
    except (ValueError, KeyError):
        return None
    return d.toordinal()


def classify_token(text: bytes) -> TokenClass:
    """Classify a whole token text. Empty input is a caller bug."""
    if not text:
        raise ValueError("cannot classify empty token text")
    m = _CLASSIFY_RE.fullmatch(text)
    if m is None:
        return TokenClass.OTHER
    cls = _GROUP_CLASS[m.lastgroup]
    # The regex checks shape only; reject calendar-impossible dates.
    if cls is TokenClass.TIMESTAMP:
        if _parse_date(_timestamp_date_part(text)) is None:
            return TokenClass.OTHER
    elif cls is TokenClass.DATE:
        if _parse_date(text) is None:
            return TokenClass.OTHER
    return cls


def _timestamp_date_part(text: bytes) -> bytes:
    # ISO dates are 10 bytes, DD/Mon/YYYY dates are 11.
    return text[:11] if text[2:3] == b"/" else text[:10]


class Token:
    """One typed token; the class is derived from the text on demand."""

    __slots__ = ("text", "_cls")

    def __init__(self, text: bytes, cls: TokenClass | None = None):
        self.text = text
        self._cls = cls

    @property
    def cls(self) -> TokenClass:
        c = self._cls
        if c is None:
            c = classify_token(self.text)
            self._cls = c
        return c

    def __eq__(self, other):
        return isinstance(other, Token) and self.text == other.text

    def __hash__(self):
        return hash(self.text)

    def __repr__(self):
        return f"Token({self.cls.name}, {self.text!r})"


class TokenizedLine:
    """A line as a token sequence plus its end-of-line bytes."""

    __slots__ = ("tokens", "terminator")

    def __init__(self, tokens: list[Token], terminator: bytes = b""):
        self.tokens = tokens
        self.terminator = terminator

    def __eq__(self, other):
        return (isinstance(other, TokenizedLine)
                and self.terminator == other.terminator
                and self.tokens == other.tokens)

    def __repr__(self):
        return f"TokenizedLine({self.tokens!r}, terminator={self.terminator!r})"


def tokenize(line: bytes, terminator: bytes = b"") -> TokenizedLine:
    """Split a line (no end-of-line bytes) into tokens, byte-exactly."""
    tokens = []
    append = tokens.append
    sep = TokenClass.SEPARATOR
    for m in _TOKEN_RE.finditer(line):
        text = m.group()
        if text[0] in _SEP_BYTES:
            append(Token(text, sep))
        else:
            append(Token(text))
    return TokenizedLine(tokens, terminator)


def detokenize(tl: TokenizedLine) -> bytes:
    return b"".join(t.text for t in tl.tokens) + tl.terminator


def split_lines(stream, chunk_size: int = 1 << 16) -> Iterator[tuple[bytes, bytes]]:
    """Yield (line, terminator) pairs from a binary stream.

    Lines are split on LF; a CR immediately before the LF belongs to the
    terminator, so CRLF files round-trip exactly. A final line without an
    EOL is yielded with an empty terminator. Lone CRs stay in the line.
    """
    pending = b""
    while True:
        chunk = stream.read(chunk_size)
        if not chunk:
            break
        data = pending + chunk
        start = 0
        while True:
            nl = data.find(b"\n", start)
            if nl < 0:
                break
            if nl > start and data[nl - 1] == 0x0D:
                yield data[start:nl - 1], b"\r\n"
            else:
                yield data[start:nl], b"\n"
            start = nl + 1
        pending = data[start:]
    if pending:
        yield pending, b""


def iter_tokenized(pairs: Iterable[tuple[bytes, bytes]]) -> Iterator[TokenizedLine]:
    for line, term in pairs:
        yield tokenize(line, term)
