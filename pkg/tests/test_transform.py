import random

import pytest

from flca.errors import CorruptRecord, InternalError, InvalidVariant
from flca.tokenizer import Token, TokenClass, TokenizedLine, tokenize
from flca.transform import (CopyRun, DictRef, EndOfLine, FieldDelta, Literal,
                            PrefixMatch, TokenDictionary, VARIANTS,
                            build_dictionary, decode_block, decode_field,
                            decode_line, encode_block, encode_field,
                            encode_line, record_ops, variant_from_id)


def line_of(*texts, term=b"\n"):
    return TokenizedLine([Token(t) for t in texts], term)


def ops_of(record):
    return record_ops(record)[0]


# --- variants ---------------------------------------------------------------

def test_variant_bits():
    v0 = variant_from_id(0)
    assert (v0.use_dict, v0.line_ref, v0.field_code) == (False, False, False)
    v7 = variant_from_id(7)
    assert (v7.use_dict, v7.line_ref, v7.field_code) == (True, True, True)
    v5 = variant_from_id(5)
    assert (v5.use_dict, v5.line_ref, v5.field_code) == (True, False, True)


@pytest.mark.parametrize("bad", [-1, 8, 100])
def test_variant_out_of_range(bad):
    with pytest.raises(InvalidVariant):
        variant_from_id(bad)


def test_variant_id_reconstruction():
    for v in VARIANTS:
        assert v.id == int(v.use_dict) + 2 * int(v.line_ref) + 4 * int(v.field_code)


# --- dictionary ---------------------------------------------------------------

def test_empty_sample_gives_empty_dictionary():
    d = build_dictionary([], 100)
    assert len(d) == 0
    assert TokenDictionary.deserialize(d.serialize()) == d


def test_dictionary_most_frequent_first():
    lines = [line_of(b"ERROR", b" ", b"x%d" % i) for i in range(100)]
    d = build_dictionary(lines, 1)
    assert d.entries == [b"ERROR"]


def test_dictionary_tie_broken_by_byte_order():
    lines = [line_of(b"bb", b" ", b"aa") for _ in range(5)]
    d = build_dictionary(lines, 10)
    assert d.entries == [b"aa", b"bb"]


def test_dictionary_thresholds():
    lines = [line_of(b"x", b"yy", b"zz") for _ in range(3)]
    # length 1 never enters; frequency 3 < 4 keeps the rest out
    assert build_dictionary(lines, 10).entries == []
    lines.append(line_of(b"yy"))
    assert build_dictionary(lines, 10).entries == [b"yy"]


def test_dictionary_serialization_roundtrip():
    d = TokenDictionary([b"alpha", b"\x00\xff", b"17"])
    d2 = TokenDictionary.deserialize(d.serialize())
    assert d2.entries == d.entries
    assert d2.index == d.index


# --- field coding -------------------------------------------------------------

def field_roundtrip(prev_text, cur_text):
    prev, cur = Token(prev_text), Token(cur_text)
    payload = encode_field(prev, cur)
    out = decode_field(prev, payload)
    assert out.text == cur_text
    assert out.cls is cur.cls
    return payload


def test_decimal_delta_keeps_width():
    field_roundtrip(b"100", b"103")
    field_roundtrip(b"007", b"010")
    field_roundtrip(b"999", b"000")


def test_decimal_width_change_falls_back_to_literal():
    payload = field_roundtrip(b"99", b"100")
    assert payload[0] == 1  # fallback marker


def test_decimal_huge_values_fall_back():
    payload = field_roundtrip(b"9" * 40, b"1" * 40)
    assert payload[0] == 1


def test_time_delta_zero():
    field_roundtrip(b"12:00:01", b"12:00:01")


def test_time_with_fraction():
    field_roundtrip(b"12:00:01", b"13:59:59.123450")
    field_roundtrip(b"23:59:59.5", b"00:00:00")


def test_date_formats_and_sign():
    field_roundtrip(b"2023-01-02", b"2022-12-31")
    field_roundtrip(b"17/Mar/2024", b"01/Jan/2020")
    field_roundtrip(b"2024-02-29", b"01/Mar/2024")


def test_timestamp_across_midnight():
    field_roundtrip(b"17/Mar/2024:23:59:58", b"2024-03-18T00:00:02.25")


def test_ipv4_raw_octets():
    payload = field_roundtrip(b"10.0.0.1", b"255.254.0.7")
    assert payload == bytes([255, 254, 0, 7])


def test_encode_field_rejects_class_mismatch():
    with pytest.raises(InternalError):
        encode_field(Token(b"200"), Token(b"abc"))
    with pytest.raises(InternalError):
        encode_field(Token(b"hello"), Token(b"world"))


def test_decode_field_rejects_malformed():
    prev = Token(b"10.0.0.1")
    with pytest.raises(CorruptRecord):
        decode_field(prev, b"\x01\x02\x03")
    with pytest.raises(CorruptRecord):
        decode_field(Token(b"100"), b"\x09")
    with pytest.raises(CorruptRecord):
        decode_field(Token(b"100"), b"")


def test_field_fuzz_roundtrip():
    rng = random.Random(0xFE11)
    # per class, generators of valid token texts
    def decimal():
        width = rng.randrange(1, 12)
        return b"%0*d" % (width, rng.randrange(10 ** width))
    def ipv4():
        return b".".join(b"%d" % rng.randrange(256) for _ in range(4))
    def tstamp():
        frac = b".%d" % rng.randrange(1000) if rng.random() < 0.3 else b""
        sep = rng.choice([b"T", b":", b"_"])
        if rng.random() < 0.5:
            date = b"%04d-%02d-%02d" % (rng.randrange(1990, 2100), rng.randrange(1, 13), rng.randrange(1, 29))
        else:
            mon = [b"Jan", b"Feb", b"Mar", b"Apr", b"May", b"Jun", b"Jul",
                   b"Aug", b"Sep", b"Oct", b"Nov", b"Dec"][rng.randrange(12)]
            date = b"%02d/%s/%04d" % (rng.randrange(1, 29), mon, rng.randrange(1990, 2100))
        time_ = b"%02d:%02d:%02d" % (rng.randrange(24), rng.randrange(60), rng.randrange(60))
        return date + sep + time_ + frac
    def time_only():
        frac = b".%d" % rng.randrange(10 ** 6) if rng.random() < 0.3 else b""
        return b"%02d:%02d:%02d" % (rng.randrange(24), rng.randrange(60), rng.randrange(60)) + frac
    def date_only():
        if rng.random() < 0.5:
            return b"%04d-%02d-%02d" % (rng.randrange(1, 9999), rng.randrange(1, 13), rng.randrange(1, 29))
        mon = [b"Jan", b"Feb", b"Mar", b"Apr", b"May", b"Jun", b"Jul",
               b"Aug", b"Sep", b"Oct", b"Nov", b"Dec"][rng.randrange(12)]
        return b"%02d/%s/%04d" % (rng.randrange(1, 29), mon, rng.randrange(1, 9999))

    gens = [decimal, ipv4, tstamp, time_only, date_only]
    for _ in range(10000):
        gen = rng.choice(gens)
        a, b = gen(), gen()
        if Token(a).cls is not Token(b).cls:
            continue
        payload = encode_field(Token(a), Token(b))
        assert decode_field(Token(a), payload).text == b


# --- line encode/decode ---------------------------------------------------------

def test_identical_lines_become_one_copy_run():
    tl = tokenize(b"alpha beta 17", b"\n")
    rec = encode_line(tl, tl, VARIANTS[2])
    assert ops_of(rec) == [CopyRun(5), EndOfLine(b"\n")]
    assert len(rec) <= 4


def test_prefix_match_example():
    prev = line_of(b"error=404")
    cur = line_of(b"error=500")
    rec = encode_line(prev, cur, VARIANTS[2])
    assert ops_of(rec) == [PrefixMatch(6, b"500"), EndOfLine(b"\n")]


def test_no_context_all_literals():
    cur = line_of(b"a", b" ", b"b")
    rec = encode_line(None, cur, VARIANTS[0])
    assert ops_of(rec) == [Literal(b"a"), Literal(b" "), Literal(b"b"),
                           EndOfLine(b"\n")]


def test_priority_copy_over_field_over_dict():
    d = TokenDictionary([b"200"])
    prev = line_of(b"200")
    cur = line_of(b"200")
    rec = encode_line(prev, cur, VARIANTS[7], d)
    assert isinstance(ops_of(rec)[0], CopyRun)
    # field beats dict when values differ
    cur2 = line_of(b"201")
    rec2 = encode_line(prev, cur2, VARIANTS[7], d)
    assert isinstance(ops_of(rec2)[0], FieldDelta)
    # dict beats prefix
    d2 = TokenDictionary([b"error=500"])
    rec3 = encode_line(line_of(b"error=404"), line_of(b"error=500"),
                       VARIANTS[3], d2)
    assert ops_of(rec3)[0] == DictRef(0)


def test_dict_ref_out_of_range_is_corrupt():
    d = TokenDictionary([b"aa"])
    rec = encode_line(None, line_of(b"aa"), VARIANTS[1], d)
    small = TokenDictionary([])
    with pytest.raises(CorruptRecord):
        decode_line(None, rec, 0, VARIANTS[1], small)


def test_decoder_rejects_op_not_permitted_by_variant():
    prev = line_of(b"aa")
    rec = encode_line(prev, prev, VARIANTS[2])  # CopyRun under line_ref
    with pytest.raises(CorruptRecord):
        decode_line(prev, rec, 0, VARIANTS[0])


def test_decoder_rejects_copy_past_prev():
    prev = line_of(b"aa")
    rec = encode_line(prev, prev, VARIANTS[2])
    with pytest.raises(CorruptRecord):
        decode_line(None, rec, 0, VARIANTS[2])


def test_unknown_tag_is_corrupt():
    with pytest.raises(CorruptRecord):
        decode_line(None, b"\xee", 0, VARIANTS[0])


def test_truncated_record_is_corrupt():
    rec = encode_line(None, line_of(b"abcdef"), VARIANTS[0])
    for cut in range(len(rec)):
        with pytest.raises(CorruptRecord):
            decode_line(None, rec[:cut], 0, VARIANTS[0])


def test_terminator_kinds_roundtrip():
    for term in (b"", b"\n", b"\r\n", b"\rwe\x00ird"):
        tl = line_of(b"x", term=term)
        rec = encode_line(None, tl, VARIANTS[0])
        got, pos = decode_line(None, rec, 0, VARIANTS[0])
        assert pos == len(rec)
        assert got.terminator == term


def test_identical_repeated_lines_cost_at_most_4_bytes_each():
    tl = tokenize(b"10.0.0.1 - - GET /x 200", b"\n")
    lines = [tl] * 100
    for vid in (2, 3, 6, 7):
        d = build_dictionary(lines, 64)
        data = encode_block(lines, VARIANTS[vid], d)
        first = len(encode_line(None, tl, VARIANTS[vid], d))
        assert len(data) - first <= 4 * 99


def random_lines(rng, count, vocab=None):
    lines = []
    for _ in range(count):
        k = rng.randrange(0, 6)
        fields = []
        for _ in range(k):
            if vocab is not None:
                fields.append(rng.choice(vocab))
            else:
                n = rng.randrange(1, 12)
                fields.append(bytes(rng.choice(b"abcdef0123456789./:=-")
                                    for _ in range(n)))
        line = b" ".join(fields)
        term = rng.choice([b"\n", b"\r\n", b""])
        lines.append(tokenize(line, term))
    return lines


def test_block_roundtrip_fuzz_all_variants():
    rng = random.Random(0xB10C)
    for trial in range(120):
        lines = random_lines(rng, rng.randrange(0, 30))
        d = build_dictionary(lines, 32)
        for v in VARIANTS:
            data = encode_block(lines, v, d)
            back = decode_block(data, v, d)
            assert back == lines, (trial, v.id)


def test_line_pair_roundtrip_fuzz():
    rng = random.Random(0xA11)
    for _ in range(10000):
        prev_l = random_lines(rng, 1)[0] if rng.random() < 0.8 else None
        cur_l = random_lines(rng, 1)[0]
        d = build_dictionary([l for l in (prev_l, cur_l) if l] * 4, 16)
        v = VARIANTS[rng.randrange(8)]
        rec = encode_line(prev_l, cur_l, v, d)
        got, pos = decode_line(prev_l, rec, 0, v, d)
        assert pos == len(rec)
        assert got == cur_l


# --- canonical encoding: independent reference implementation -------------------

FIELDABLE = (TokenClass.TIMESTAMP, TokenClass.DATE, TokenClass.TIME,
             TokenClass.IPV4, TokenClass.DECIMAL)


def reference_ops(prev, cur, variant, dct):
    """Straightforward restatement of the op priority, token by token."""
    ptoks = prev.tokens if prev else []
    ops = []
    i = 0
    while i < len(cur.tokens):
        tok = cur.tokens[i]
        prev_tok = ptoks[i] if i < len(ptoks) else None
        if variant.line_ref and prev_tok is not None and prev_tok.text == tok.text:
            count = 0
            while (i + count < len(cur.tokens) and i + count < len(ptoks)
                   and cur.tokens[i + count].text == ptoks[i + count].text):
                count += 1
            ops.append(CopyRun(count))
            i += count
            continue
        if (variant.field_code and prev_tok is not None
                and tok.cls in FIELDABLE and prev_tok.cls is tok.cls):
            ops.append(FieldDelta(tok.cls, encode_field(prev_tok, tok)))
        elif variant.use_dict and tok.text in dct.index:
            ops.append(DictRef(dct.index[tok.text]))
        elif variant.line_ref and prev_tok is not None and _cp(prev_tok.text, tok.text) >= 2:
            p = _cp(prev_tok.text, tok.text)
            ops.append(PrefixMatch(p, tok.text[p:]))
        else:
            ops.append(Literal(tok.text))
        i += 1
    ops.append(EndOfLine(cur.terminator))
    return ops


def _cp(a, b):
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


def test_canonical_encoding_exhaustive_small_alphabet():
    texts = (b"al", b"alpha", b"17")
    lines = [TokenizedLine([Token(t) for t in combo], b"\n")
             for length in range(5)
             for combo in _product(texts, length)]
    d = TokenDictionary([b"alpha"])
    for v in VARIANTS:
        for prev in [None] + lines:
            for cur in lines:
                rec = encode_line(prev, cur, v, d)
                assert ops_of(rec) == reference_ops(prev, cur, v, d), (
                    v.id, prev, cur)


def _product(items, length):
    if length == 0:
        yield ()
        return
    for rest in _product(items, length - 1):
        for item in items:
            yield (item,) + rest
