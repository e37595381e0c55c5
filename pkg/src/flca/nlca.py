"""Non-linear cellular automata classifier for routing blocks to variants.

A rule is a bit table over cyclic radius-1 or radius-2 neighborhoods of a
two-state lattice. Rules that are additive over GF(2) (the classic linear
rules) are rejected for classification; a genetic algorithm searches the
non-linear ones for a rule whose attractor basins separate log blocks so
that each basin can pick its own transform variant, scored by actual
backend-compressed bytes.

Block features (eight values, each quantized to four bits, concatenated
into a 32-cell lattice configuration):

  0  rate of tokens equal to the same position in the previous line
  1  rate of tokens sharing a >=2-byte prefix with that position (not equal)
  2  rate of temporal tokens (timestamp / date / time classes)
  3  rate of IPv4 tokens
  4  rate of decimal tokens
  5  rate of tokens present in the dictionary
  6  floor(log2(mean line length + 1))
  7  floor(log2(token count variance + 1))

Configurations are packed into ints with cell 0 as the most significant
bit, so integer order equals lexicographic order on the cell sequence; an
attractor id is the smallest configuration on its cycle.
"""

from __future__ import annotations

import math
import random
import struct
import zlib
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

from .backend import BackendId, compress_block
from .errors import (CorruptModel, InsufficientTraining, RefuseExhaustive)
from .tokenizer import TokenClass, TokenizedLine
from .transform import (TokenDictionary, TransformVariant, VARIANTS,
                        build_dictionary, encode_block)
from .wire import read_uvarint, write_uvarint

LATTICE_LEN = 32
DEFAULT_MAX_STEPS = 128
DEFAULT_K = 4
DICT_MAX_ENTRIES = 4096
DICT_SAMPLE_LINES = 64 * 1024
_PENALTY_PER_MISSING_BASIN = 10 ** 6
_MAX_BASINS = 255  # archive block records keep one byte, 0xFF means none

MODEL_MAGIC = b"FLCM"
MODEL_VERSION = 1


@dataclass(frozen=True)
class NlcaRule:
    radius: int
    table: tuple[int, ...]

    def __post_init__(self):
        if self.radius not in (1, 2):
            raise ValueError("radius must be 1 or 2")
        if len(self.table) != 1 << (2 * self.radius + 1):
            raise ValueError("table length does not match radius")
        if any(b not in (0, 1) for b in self.table):
            raise ValueError("table entries must be bits")

    @classmethod
    def from_number(cls, number: int, radius: int = 1) -> "NlcaRule":
        size = 1 << (2 * radius + 1)
        return cls(radius, tuple((number >> i) & 1 for i in range(size)))

    def number(self) -> int:
        return sum(bit << i for i, bit in enumerate(self.table))

    def table_bytes(self) -> bytes:
        out = bytearray((len(self.table) + 7) // 8)
        for i, bit in enumerate(self.table):
            if bit:
                out[i >> 3] |= 1 << (i & 7)
        return bytes(out)

    @classmethod
    def from_table_bytes(cls, radius: int, data: bytes) -> "NlcaRule":
        size = 1 << (2 * radius + 1)
        if len(data) != (size + 7) // 8:
            raise ValueError("table byte length does not match radius")
        return cls(radius, tuple((data[i >> 3] >> (i & 7)) & 1
                                 for i in range(size)))


def pack_cells(cells: Sequence[int]) -> int:
    value = 0
    for c in cells:
        value = (value << 1) | (c & 1)
    return value


def unpack_cells(value: int, n: int) -> tuple[int, ...]:
    return tuple((value >> (n - 1 - i)) & 1 for i in range(n))


class _Stepper:
    """Bit-parallel synchronous update of a packed cyclic lattice."""

    __slots__ = ("n", "mask", "radius", "set_patterns")

    def __init__(self, rule: NlcaRule, n: int):
        self.n = n
        self.mask = (1 << n) - 1
        self.radius = rule.radius
        width = 2 * rule.radius + 1
        self.set_patterns = tuple(
            tuple((p >> (width - 1 - j)) & 1 for j in range(width))
            for p, bit in enumerate(rule.table) if bit)

    def step(self, x: int) -> int:
        n = self.n
        mask = self.mask
        left1 = (x >> 1) | ((x & 1) << (n - 1))
        right1 = ((x << 1) & mask) | (x >> (n - 1))
        if self.radius == 1:
            vecs = (left1, x, right1)
        else:
            left2 = (left1 >> 1) | ((left1 & 1) << (n - 1))
            right2 = ((right1 << 1) & mask) | (right1 >> (n - 1))
            vecs = (left2, left1, x, right1, right2)
        comps = tuple(v ^ mask for v in vecs)
        out = 0
        for bits in self.set_patterns:
            m = mask
            for j, b in enumerate(bits):
                m &= vecs[j] if b else comps[j]
                if not m:
                    break
            out |= m
        return out


@lru_cache(maxsize=512)
def _stepper(rule: NlcaRule, n: int) -> _Stepper:
    return _Stepper(rule, n)


def step_lattice(cells: Sequence[int], rule: NlcaRule) -> tuple[int, ...]:
    """One synchronous update of a cyclic lattice."""
    n = len(cells)
    return unpack_cells(_stepper(rule, n).step(pack_cells(cells)), n)


def is_linear(rule: NlcaRule) -> bool:
    """True iff the local map is additive over GF(2) (superposition holds)."""
    size = len(rule.table)
    table = rule.table
    for x in range(size):
        fx = table[x]
        for y in range(size):
            if table[x ^ y] != fx ^ table[y]:
                return False
    return True


def find_attractor(config, rule: NlcaRule, max_steps: int,
                   n: int | None = None) -> int | None:
    """Attractor id of config's trajectory, or None if not found in time.

    Accepts a cell sequence or a packed int (then n is required). The id is
    the smallest packed configuration on the cycle.
    """
    if isinstance(config, int):
        if n is None:
            raise ValueError("packed config needs an explicit lattice length")
        x = config
    else:
        n = len(config)
        x = pack_cells(config)
    stepper = _stepper(rule, n)
    step = stepper.step
    seen = {x: 0}
    trajectory = [x]
    for i in range(1, max_steps + 1):
        x = step(x)
        hit = seen.get(x)
        if hit is not None:
            return min(trajectory[hit:])
        seen[x] = i
        trajectory.append(x)
    return None


def enumerate_basins(rule: NlcaRule, n: int) -> list[int]:
    """Attractor label for every packed configuration 0..2^n-1."""
    if n > 20:
        raise RefuseExhaustive(f"2^{n} configurations is too many to enumerate")
    size = 1 << n
    step = _stepper(rule, n).step
    labels = [-1] * size
    for start in range(size):
        if labels[start] >= 0:
            continue
        path = []
        path_index = {}
        x = start
        while labels[x] < 0 and x not in path_index:
            path_index[x] = len(path)
            path.append(x)
            x = step(x)
        if labels[x] >= 0:
            label = labels[x]
        else:
            label = min(path[path_index[x]:])
        for y in path:
            labels[y] = label
    return labels


# --- block features ----------------------------------------------------------

class BlockFeatures(NamedTuple):
    token_match: int
    prefix_sim: int
    temporal_rate: int
    ipv4_rate: int
    decimal_rate: int
    dict_rate: int
    length_bucket: int
    count_var_bucket: int


_TEMPORAL = (TokenClass.TIMESTAMP, TokenClass.DATE, TokenClass.TIME)


def _quantize_rate(num: int, den: int) -> int:
    if den <= 0:
        return 0
    q = (num * 16) // den
    return 15 if q > 15 else q


def _log_bucket(value: float) -> int:
    b = int(math.log2(value + 1.0))
    return 15 if b > 15 else b


def extract_features(block: Sequence[TokenizedLine],
                     dct: TokenDictionary | None) -> BlockFeatures:
    if not block:
        raise ValueError("cannot extract features from an empty block")
    index = dct.index if dct is not None else None
    total = 0
    temporal = ipv4 = decimal = dict_hits = 0
    match_num = match_den = prefix_num = 0
    lengths = []
    counts = []
    prev = None
    for line in block:
        toks = line.tokens
        counts.append(len(toks))
        length = 0
        for t in toks:
            length += len(t.text)
            c = t.cls
            if c in _TEMPORAL:
                temporal += 1
            elif c is TokenClass.IPV4:
                ipv4 += 1
            elif c is TokenClass.DECIMAL:
                decimal += 1
            if index is not None and t.text in index:
                dict_hits += 1
        total += len(toks)
        lengths.append(length)
        if prev is not None:
            m = min(len(toks), len(prev))
            match_den += m
            for i in range(m):
                a = prev[i].text
                b = toks[i].text
                if a == b:
                    match_num += 1
                elif a[:2] == b[:2] and len(a) >= 2 and len(b) >= 2:
                    prefix_num += 1
        prev = toks
    n_lines = len(block)
    mean_len = sum(lengths) / n_lines
    mean_count = sum(counts) / n_lines
    variance = sum((c - mean_count) ** 2 for c in counts) / n_lines
    return BlockFeatures(
        token_match=_quantize_rate(match_num, match_den),
        prefix_sim=_quantize_rate(prefix_num, match_den),
        temporal_rate=_quantize_rate(temporal, total),
        ipv4_rate=_quantize_rate(ipv4, total),
        decimal_rate=_quantize_rate(decimal, total),
        dict_rate=_quantize_rate(dict_hits, total),
        length_bucket=_log_bucket(mean_len),
        count_var_bucket=_log_bucket(variance),
    )


def features_config(features: BlockFeatures) -> int:
    """Pack the eight 4-bit features into a 32-cell configuration."""
    value = 0
    for f in features:
        value = (value << 4) | f
    return value


# --- model -------------------------------------------------------------------

@dataclass(frozen=True)
class Basin:
    attractor_id: int
    variant_id: int
    quality: float


@dataclass(frozen=True)
class LogIndexTree:
    """Feature-ordered exact-path index from feature values to basins.

    feature_order lists feature indices from the root down; the most
    discriminative features sit deepest. Leaves map a packed path (4 bits
    per level, root at the low nibble) to a basin index, or None.
    """

    feature_order: tuple[int, ...]
    leaves: dict[int, int | None]

    def path_key(self, features: BlockFeatures) -> int:
        key = 0
        for depth, f in enumerate(self.feature_order):
            key |= features[f] << (4 * depth)
        return key

    def lookup(self, features: BlockFeatures) -> int | None:
        return self.leaves.get(self.path_key(features))


@dataclass(frozen=True)
class NlcaModel:
    rule: NlcaRule
    basins: tuple[Basin, ...]
    default_variant_id: int
    tree: LogIndexTree
    lattice_len: int = LATTICE_LEN
    max_steps: int = DEFAULT_MAX_STEPS
    basin_of_attractor: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.basins:
            raise ValueError("model needs at least one basin")
        if is_linear(self.rule):
            raise ValueError("model rule must be non-linear")
        ids = [b.attractor_id for b in self.basins]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate attractor ids")
        self.basin_of_attractor.update(
            {b.attractor_id: i for i, b in enumerate(self.basins)})

    def variant_for_basin(self, basin_index: int | None) -> TransformVariant:
        if basin_index is None:
            return VARIANTS[self.default_variant_id]
        return VARIANTS[self.basins[basin_index].variant_id]


def classify_block(block: Sequence[TokenizedLine], dct: TokenDictionary | None,
                   model: NlcaModel) -> tuple[int | None, TransformVariant]:
    """Route a block to a basin (by CA dynamics) and its transform variant."""
    config = features_config(extract_features(block, dct))
    attractor = find_attractor(config, model.rule, model.max_steps,
                               n=model.lattice_len)
    basin = None
    if attractor is not None:
        basin = model.basin_of_attractor.get(attractor)
    return basin, model.variant_for_basin(basin)


# --- fitness and training ----------------------------------------------------

@dataclass(frozen=True)
class GaConfig:
    population_size: int = 50
    generations: int = 30
    crossover_rate: float = 0.9
    mutation_rate: float = 0.02
    elitism: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population must be at least 2")
        if not 0 <= self.elitism < self.population_size:
            raise ValueError("elitism must be smaller than the population")
        for rate in (self.crossover_rate, self.mutation_rate):
            if not 0.0 <= rate <= 1.0:
                raise ValueError("rates must be within [0, 1]")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")


class TrainingSet:
    """Training blocks with per-variant compressed sizes precomputed."""

    def __init__(self, blocks: Sequence[Sequence[TokenizedLine]],
                 dct: TokenDictionary, backend: BackendId,
                 max_steps: int = DEFAULT_MAX_STEPS):
        if not blocks:
            raise InsufficientTraining("no training blocks")
        self.blocks = blocks
        self.dct = dct
        self.backend = backend
        self.max_steps = max_steps
        self.sizes = [
            [len(compress_block(encode_block(list(block), v, dct), backend).payload)
             for v in VARIANTS]
            for block in blocks
        ]
        self.features = [extract_features(block, dct) for block in blocks]
        self.configs = [features_config(f) for f in self.features]
        totals = [sum(row[v] for row in self.sizes) for v in range(8)]
        self.variant_totals = totals
        self.best_single_variant = min(range(8), key=lambda v: (totals[v], v))
        self.best_single_total = totals[self.best_single_variant]

    def group_by_attractor(self, rule: NlcaRule
                           ) -> tuple[dict[int, list[int]], list[int]]:
        memo: dict[int, int | None] = {}
        groups: dict[int, list[int]] = defaultdict(list)
        strays: list[int] = []
        for b, config in enumerate(self.configs):
            att = memo.get(config, _MISSING)
            if att is _MISSING:
                att = find_attractor(config, rule, self.max_steps,
                                     n=LATTICE_LEN)
                memo[config] = att
            if att is None:
                strays.append(b)
            else:
                groups[att].append(b)
        return groups, strays

    def best_variant_for(self, block_ids: Sequence[int]) -> tuple[int, int]:
        """(variant id, total bytes) minimizing the group's compressed size."""
        best_v = 0
        best_total = None
        for v in range(8):
            total = sum(self.sizes[b][v] for b in block_ids)
            if best_total is None or total < best_total:
                best_v, best_total = v, total
        return best_v, best_total

    def fitness_for_table(self, table: tuple[int, ...], k: int,
                          radius: int) -> float:
        return self.fitness(NlcaRule(radius, table), k)

    def fitness(self, rule: NlcaRule, k: int) -> float:
        groups, strays = self.group_by_attractor(rule)
        per_basin = 0
        for block_ids in groups.values():
            per_basin += self.best_variant_for(block_ids)[1]
        for b in strays:
            per_basin += self.sizes[b][self.best_single_variant]
        penalty = _PENALTY_PER_MISSING_BASIN * max(0, k - len(groups))
        return float(self.best_single_total - per_basin - penalty)


_MISSING = object()


def fitness(rule: NlcaRule, training: Sequence[Sequence[TokenizedLine]],
            k: int, backend: BackendId,
            dct: TokenDictionary | None = None) -> float:
    """Compression gain of per-basin variant choice over the best single one."""
    if dct is None:
        dct = _training_dictionary(training)
    return TrainingSet(training, dct, backend).fitness(rule, k)


def _training_dictionary(blocks: Sequence[Sequence[TokenizedLine]]
                         ) -> TokenDictionary:
    def sample():
        seen = 0
        for block in blocks:
            for line in block:
                if seen >= DICT_SAMPLE_LINES:
                    return
                seen += 1
                yield line
    return build_dictionary(sample(), DICT_MAX_ENTRIES)


def _random_table(rng: random.Random, bits: int) -> tuple[int, ...]:
    return tuple(rng.randrange(2) for _ in range(bits))


def _repair_nonlinear(table: tuple[int, ...], radius: int,
                      rng: random.Random) -> tuple[int, ...]:
    while is_linear(NlcaRule(radius, table)):
        i = rng.randrange(len(table))
        table = table[:i] + (table[i] ^ 1,) + table[i + 1:]
    return table


def _ga_evolve(cfg: GaConfig, radius: int, score_fn) -> tuple[tuple[int, ...], list[float]]:
    """Generic GA over rule tables; returns best table and per-gen best score.

    score_fn(tables, generation) scores a list of tables; elites keep the
    score recorded when they were created, so the best-so-far curve never
    decreases even under per-generation resampled objectives.
    """
    rng = random.Random(cfg.seed)
    bits = 1 << (2 * radius + 1)
    pop = [_repair_nonlinear(_random_table(rng, bits), radius, rng)
           for _ in range(cfg.population_size)]
    scores = score_fn(pop, 0)
    history = []

    def rank() -> list[int]:
        return sorted(range(len(pop)), key=lambda i: (-scores[i], pop[i]))

    order = rank()
    history.append(scores[order[0]])

    for gen in range(1, cfg.generations + 1):
        elites = [pop[i] for i in order[:cfg.elitism]]
        elite_scores = [scores[i] for i in order[:cfg.elitism]]
        newcomers = []
        while len(elites) + len(newcomers) < cfg.population_size:
            a = max((rng.randrange(len(pop)) for _ in range(3)),
                    key=lambda i: (scores[i], pop[i]))
            b = max((rng.randrange(len(pop)) for _ in range(3)),
                    key=lambda i: (scores[i], pop[i]))
            if rng.random() < cfg.crossover_rate:
                point = rng.randrange(1, bits)
                child = pop[a][:point] + pop[b][point:]
            else:
                child = pop[a]
            mutated = list(child)
            for j in range(bits):
                if rng.random() < cfg.mutation_rate:
                    mutated[j] ^= 1
            newcomers.append(_repair_nonlinear(tuple(mutated), radius, rng))
        new_scores = score_fn(newcomers, gen)
        pop = elites + newcomers
        scores = elite_scores + new_scores
        order = rank()
        history.append(scores[order[0]])

    return pop[order[0]], history


class BasinReport(NamedTuple):
    basin_index: int
    attractor_id: int
    variant_id: int
    blocks: int
    quality: float


def train_model_report(training: Sequence[Sequence[TokenizedLine]],
                       ga_cfg: GaConfig, k: int, backend: BackendId,
                       dct: TokenDictionary | None = None,
                       radius: int = 2,
                       max_steps: int = DEFAULT_MAX_STEPS
                       ) -> tuple[NlcaModel, TokenDictionary, list[float], list[BasinReport]]:
    """GA-train a model; also returns the fitness curve and basin table."""
    if len(training) < k:
        raise InsufficientTraining(
            f"need at least {k} training blocks, got {len(training)}")
    if dct is None:
        dct = _training_dictionary(training)
    ts = TrainingSet(training, dct, backend, max_steps)

    cache: dict[tuple[int, ...], float] = {}

    def score(tables, _gen):
        out = []
        for t in tables:
            v = cache.get(t)
            if v is None:
                v = ts.fitness_for_table(t, k, radius)
                cache[t] = v
            out.append(v)
        return out

    best_table, history = _ga_evolve(ga_cfg, radius, score)
    rule = NlcaRule(radius, best_table)

    groups, strays = ts.group_by_attractor(rule)
    if not groups:
        raise InsufficientTraining(
            "training produced no attractors; try more steps or blocks")
    ordered = sorted(groups.items(),
                     key=lambda item: (-len(item[1]), item[0]))[:_MAX_BASINS]
    ordered.sort(key=lambda item: item[0])

    basins = []
    reports = []
    kept = {}
    for idx, (attractor, block_ids) in enumerate(ordered):
        variant_id, total = ts.best_variant_for(block_ids)
        baseline = sum(ts.sizes[b][ts.best_single_variant] for b in block_ids)
        quality = total / baseline if baseline else 1.0
        basins.append(Basin(attractor, variant_id, quality))
        reports.append(BasinReport(idx, attractor, variant_id,
                                   len(block_ids), quality))
        kept[attractor] = idx

    labels: list[int | None] = []
    label_by_block: dict[int, int] = {}
    for attractor, block_ids in groups.items():
        idx = kept.get(attractor)
        for b in block_ids:
            label_by_block[b] = idx
    for b in range(len(training)):
        labels.append(label_by_block.get(b))

    tree = _build_tree(ts.features, labels)
    model = NlcaModel(rule=rule, basins=tuple(basins),
                      default_variant_id=ts.best_single_variant,
                      tree=tree, max_steps=max_steps)
    return model, dct, history, reports


def train_model(training: Sequence[Sequence[TokenizedLine]], ga_cfg: GaConfig,
                k: int, backend: BackendId,
                dct: TokenDictionary | None = None,
                radius: int = 2,
                max_steps: int = DEFAULT_MAX_STEPS) -> NlcaModel:
    return train_model_report(training, ga_cfg, k, backend, dct,
                              radius, max_steps)[0]


def _entropy(counts: Iterable[int]) -> float:
    total = sum(counts)
    if total == 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c:
            p = c / total
            h -= p * math.log2(p)
    return h


def _information_gain(values: list[int], labels: list) -> float:
    base = _entropy(Counter(labels).values())
    by_value: dict[int, Counter] = defaultdict(Counter)
    for v, lbl in zip(values, labels):
        by_value[v][lbl] += 1
    total = len(labels)
    cond = sum((sum(c.values()) / total) * _entropy(c.values())
               for c in by_value.values())
    return base - cond


def _build_tree(features: list[BlockFeatures], labels: list) -> LogIndexTree:
    gains = [_information_gain([f[i] for f in features], labels)
             for i in range(8)]
    ranking = sorted(range(8), key=lambda i: (-gains[i], i))
    feature_order = tuple(reversed(ranking))
    tree = LogIndexTree(feature_order, {})
    votes: dict[int, Counter] = defaultdict(Counter)
    for f, lbl in zip(features, labels):
        votes[tree.path_key(f)][lbl] += 1
    leaves: dict[int, int | None] = {}
    for key, counter in votes.items():
        leaves[key] = min(counter.items(),
                          key=lambda kv: (-kv[1], 256 if kv[0] is None else kv[0]))[0]
    return LogIndexTree(feature_order, leaves)


def build_log_index(model: NlcaModel,
                    training: Sequence[Sequence[TokenizedLine]],
                    dct: TokenDictionary | None) -> LogIndexTree:
    """Rebuild the feature index for a trained model over given blocks."""
    features = [extract_features(block, dct) for block in training]
    labels = [classify_block(block, dct, model)[0] for block in training]
    return _build_tree(features, labels)


# --- density classification sanity task --------------------------------------

def _density_run(table: tuple[int, ...], radius: int, states, n: int, steps: int):
    import numpy as np
    table_arr = np.asarray(table, dtype=np.uint8)
    s = states
    if radius == 1:
        for _ in range(steps):
            idx = ((np.roll(s, 1, axis=1) << 2) | (s << 1)
                   | np.roll(s, -1, axis=1))
            s = table_arr[idx]
    else:
        for _ in range(steps):
            idx = ((np.roll(s, 2, axis=1) << 4) | (np.roll(s, 1, axis=1) << 3)
                   | (s << 2) | (np.roll(s, -1, axis=1) << 1)
                   | np.roll(s, -2, axis=1))
            s = table_arr[idx]
    return s


def _ics_to_array(ics: Sequence[int], n: int):
    import numpy as np
    rows = np.empty((len(ics), n), dtype=np.uint8)
    for r, ic in enumerate(ics):
        for i in range(n):
            rows[r, i] = (ic >> (n - 1 - i)) & 1
    return rows


def _density_accuracy(table: tuple[int, ...], radius: int, states,
                      truth, n: int) -> float:
    final = _density_run(table, radius, states, n, 2 * n)
    pred = final.sum(axis=1) * 2 > n
    return float((pred == truth).mean())


def eval_density_rule(rule: NlcaRule, n: int, trials: int, seed: int) -> float:
    """Majority-readout density classification accuracy on random lattices."""
    if n % 2 == 0:
        raise ValueError("lattice length must be odd to avoid density ties")
    import numpy as np
    rng = random.Random(seed)
    ics = [rng.getrandbits(n) for _ in range(trials)]
    states = _ics_to_array(ics, n)
    truth = np.array([ic.bit_count() * 2 > n for ic in ics])
    return _density_accuracy(rule.table, rule.radius, states, truth, n)


def train_density_rule(ga_cfg: GaConfig, n: int) -> NlcaRule:
    """Evolve a radius-2 rule for the density task (100 fresh lattices/gen)."""
    if n % 2 == 0:
        raise ValueError("lattice length must be odd to avoid density ties")
    import numpy as np
    master = random.Random(ga_cfg.seed ^ 0xD5A7)
    radius = 2

    def score(tables, _gen):
        ics = [master.getrandbits(n) for _ in range(100)]
        states = _ics_to_array(ics, n)
        truth = np.array([ic.bit_count() * 2 > n for ic in ics])
        return [_density_accuracy(t, radius, states, truth, n) for t in tables]

    best_table, _ = _ga_evolve(ga_cfg, radius, score)
    return NlcaRule(radius, best_table)


# --- model file format ---------------------------------------------------------

def serialize_model(model: NlcaModel) -> bytes:
    buf = bytearray()
    buf += MODEL_MAGIC
    buf.append(MODEL_VERSION)
    buf.append(model.rule.radius)
    buf += model.rule.table_bytes()
    buf.append(model.lattice_len)
    buf.append(len(model.basins))
    for b in model.basins:
        buf += struct.pack("<IBd", b.attractor_id, b.variant_id, b.quality)
    buf.append(model.default_variant_id)
    buf += bytes(model.tree.feature_order)
    write_uvarint(buf, len(model.tree.leaves))
    for key in sorted(model.tree.leaves):
        basin = model.tree.leaves[key]
        buf += struct.pack("<IB", key, 0xFF if basin is None else basin)
    buf += struct.pack("<I", zlib.crc32(buf))
    return bytes(buf)


def deserialize_model(data: bytes) -> NlcaModel:
    if len(data) < 12 or data[:4] != MODEL_MAGIC:
        raise CorruptModel("not a model file")
    if struct.unpack("<I", data[-4:])[0] != zlib.crc32(data[:-4]):
        raise CorruptModel("model checksum mismatch")
    if data[4] != MODEL_VERSION:
        raise CorruptModel(f"unsupported model version {data[4]}")
    try:
        pos = 5
        radius = data[pos]
        pos += 1
        table_len = (1 << (2 * radius + 1)) // 8 if radius in (1, 2) else 0
        if not table_len:
            raise CorruptModel("bad radius")
        table_len = max(table_len, 1)
        rule = NlcaRule.from_table_bytes(radius, data[pos:pos + table_len])
        pos += table_len
        lattice_len = data[pos]
        pos += 1
        basin_count = data[pos]
        pos += 1
        basins = []
        for _ in range(basin_count):
            attractor, variant_id, quality = struct.unpack_from("<IBd", data, pos)
            pos += 13
            if variant_id > 7:
                raise CorruptModel("basin variant out of range")
            basins.append(Basin(attractor, variant_id, quality))
        default_variant = data[pos]
        pos += 1
        if default_variant > 7:
            raise CorruptModel("default variant out of range")
        feature_order = tuple(data[pos:pos + 8])
        pos += 8
        if sorted(feature_order) != list(range(8)):
            raise CorruptModel("feature order is not a permutation")
        leaf_count, pos = read_uvarint(data, pos)
        leaves: dict[int, int | None] = {}
        for _ in range(leaf_count):
            key, basin = struct.unpack_from("<IB", data, pos)
            pos += 5
            leaves[key] = None if basin == 0xFF else basin
        if pos != len(data) - 4:
            raise CorruptModel("trailing bytes in model file")
        return NlcaModel(rule=rule, basins=tuple(basins),
                         default_variant_id=default_variant,
                         tree=LogIndexTree(feature_order, leaves),
                         lattice_len=lattice_len)
    except CorruptModel:
        raise
    except (IndexError, struct.error, ValueError) as exc:
        raise CorruptModel(f"malformed model file: {exc}") from None


def save_model(model: NlcaModel, path) -> None:
    with open(path, "wb") as f:
        f.write(serialize_model(model))


def load_model(path) -> NlcaModel:
    with open(path, "rb") as f:
        return deserialize_model(f.read())
