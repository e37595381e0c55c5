import io
import random

import pytest

from flca.tokenizer import (Token, TokenClass, TokenizedLine, classify_token,
                            detokenize, split_lines, tokenize)


def classes(line):
    return [(t.cls, t.text) for t in tokenize(line).tokens]


def test_empty_line_has_no_tokens():
    assert tokenize(b"").tokens == []
    assert detokenize(tokenize(b"")) == b""


def test_basic_request_line():
    assert classes(b"GET /index 200") == [
        (TokenClass.WORD, b"GET"),
        (TokenClass.SEPARATOR, b" "),
        (TokenClass.OTHER, b"/index"),
        (TokenClass.SEPARATOR, b" "),
        (TokenClass.DECIMAL, b"200"),
    ]


def test_typed_tokens_in_line():
    got = classes(b"10.0.0.1 - 2023-01-02 12:00:01")
    assert (TokenClass.IPV4, b"10.0.0.1") in got
    assert (TokenClass.DATE, b"2023-01-02") in got
    assert (TokenClass.TIME, b"12:00:01") in got


@pytest.mark.parametrize("text,cls", [
    (b"404", TokenClass.DECIMAL),
    (b"999.1.1.1", TokenClass.OTHER),
    (b"17/Mar/2024", TokenClass.DATE),
    (b"2024-03-17", TokenClass.DATE),
    (b"2024-02-30", TokenClass.OTHER),
    (b"12:00:01", TokenClass.TIME),
    (b"12:00:01.250", TokenClass.TIME),
    (b"24:00:00", TokenClass.OTHER),
    (b"2024-03-17T12:00:01", TokenClass.TIMESTAMP),
    (b"17/Mar/2024:12:00:01", TokenClass.TIMESTAMP),
    (b"0x1F", TokenClass.HEX),
    (b"deadbeef", TokenClass.HEX),
    (b"dead", TokenClass.HEX),
    (b"beef5", TokenClass.HEX),
    (b"face", TokenClass.HEX),
    (b"1234", TokenClass.DECIMAL),
    (b"GET", TokenClass.WORD),
    (b"  \t ", TokenClass.SEPARATOR),
    (b"error=404", TokenClass.OTHER),
    (b"10.0.0.256", TokenClass.OTHER),
    (b"010.0.0.1", TokenClass.OTHER),
    (b"0.0.0.0", TokenClass.IPV4),
    (b"255.255.255.255", TokenClass.IPV4),
    (b"\xff\xfe", TokenClass.OTHER),
])
def test_classify(text, cls):
    assert classify_token(text) is cls


def test_classify_rejects_empty():
    with pytest.raises(ValueError):
        classify_token(b"")


def test_space_separated_date_time_stays_two_tokens():
    got = classes(b"2023-01-02 12:00:01")
    assert [c for c, _ in got] == [TokenClass.DATE, TokenClass.SEPARATOR,
                                   TokenClass.TIME]


def test_double_space_preserved():
    assert detokenize(tokenize(b"a  b")) == b"a  b"


def test_tokens_partition_line():
    line = b"10.9.8.7 - - [17/Mar/2024:10:00:02 +0000] \"GET / HTTP/1.1\" 200 5"
    tl = tokenize(line)
    offset = 0
    for tok in tl.tokens:
        assert tok.text != b""
        assert line[offset:offset + len(tok.text)] == tok.text
        offset += len(tok.text)
    assert offset == len(line)


def test_tokenize_is_deterministic():
    line = b"x 12:00:01 \xf0\x28\x8c\x28 7"
    a = tokenize(line)
    b = tokenize(line)
    assert a == b
    assert [t.cls for t in a.tokens] == [t.cls for t in b.tokens]


def test_roundtrip_fuzz_random_bytes():
    rng = random.Random(0xF02B)
    for _ in range(10000):
        n = rng.randrange(0, 120)
        line = bytes(rng.randrange(256) for _ in range(n)).replace(b"\n", b"\x00")
        assert detokenize(tokenize(line)) == line


def test_roundtrip_one_mib_single_line():
    rng = random.Random(1)
    line = bytes(rng.randrange(1, 256) for _ in range(1 << 20)).replace(b"\n", b" ")
    assert detokenize(tokenize(line)) == line


def test_token_equality_is_text_based():
    assert Token(b"200") == Token(b"200", TokenClass.DECIMAL)
    assert Token(b"200") != Token(b"201")


def test_split_lines_lf_crlf_and_final():
    data = b"one\ntwo\r\nthree"
    got = list(split_lines(io.BytesIO(data)))
    assert got == [(b"one", b"\n"), (b"two", b"\r\n"), (b"three", b"")]
    assert b"".join(l + t for l, t in got) == data


def test_split_lines_lone_cr_stays_in_line():
    got = list(split_lines(io.BytesIO(b"a\rb\n")))
    assert got == [(b"a\rb", b"\n")]


def test_split_lines_empty_and_blank():
    assert list(split_lines(io.BytesIO(b""))) == []
    assert list(split_lines(io.BytesIO(b"\n"))) == [(b"", b"\n")]
    assert list(split_lines(io.BytesIO(b"\r\n"))) == [(b"", b"\r\n")]


def test_split_lines_chunk_boundaries():
    data = b"abc\r\ndef\nghi\r\n" * 50
    for chunk in (1, 2, 3, 7):
        got = list(split_lines(io.BytesIO(data), chunk_size=chunk))
        assert b"".join(l + t for l, t in got) == data


def test_terminator_roundtrip():
    tl = tokenize(b"abc", b"\r\n")
    assert detokenize(tl) == b"abc\r\n"
    assert tl.terminator == b"\r\n"
