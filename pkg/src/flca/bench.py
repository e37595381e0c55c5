"""Benchmark harness: archive each corpus under each pipeline, report sizes.

A pipeline is a backend with a transform variant (the bare backend name
means variant 0, i.e. tokenization passthrough) or automatic per-block
variant selection with a trained model ("<backend>+auto"). Rows carry both
the compression ratio (compressed/original, lower is better) and the
compaction percentage 100*(1-ratio). Pipelines whose external filter is
not configured are reported as skipped rather than failing the run.
"""

from __future__ import annotations

import io
import os
import time
from dataclasses import dataclass

from .backend import BackendId
from .container import DEFAULT_BLOCK_LINES, write_archive
from .errors import BackendError
from .nlca import NlcaModel

CSV_HEADER = "corpus,pipeline,original,compressed,ratio,compaction,ms"


@dataclass
class BenchRow:
    corpus: str
    pipeline: str
    original: int
    compressed: int | None
    ms: int | None

    @property
    def skipped(self) -> bool:
        return self.compressed is None

    @property
    def ratio(self) -> float | None:
        if self.compressed is None or self.original == 0:
            return None
        return self.compressed / self.original

    @property
    def compaction(self) -> float | None:
        ratio = self.ratio
        return None if ratio is None else 100.0 * (1.0 - ratio)


class _CountingSink(io.RawIOBase):
    def __init__(self):
        self.count = 0

    def write(self, data):
        self.count += len(data)
        return len(data)


def pipelines(backends: list[BackendId], with_auto: bool) -> list[tuple[str, BackendId, int | None]]:
    """(name, backend, variant id or None for auto) in definition order."""
    out = []
    for b in backends:
        out.append((str(b), b, 0))
        for v in range(1, 8):
            out.append((f"{b}+v{v}", b, v))
        if with_auto:
            out.append((f"{b}+auto", b, None))
    return out


def run_bench(corpus_paths: list[str], backends: list[BackendId],
              model: NlcaModel | None = None,
              block_lines: int = DEFAULT_BLOCK_LINES) -> list[BenchRow]:
    rows = []
    plan = pipelines(backends, model is not None)
    for path in corpus_paths:
        corpus = os.path.basename(path)
        original = os.path.getsize(path)
        for name, backend, variant_id in plan:
            start = time.perf_counter()
            sink = _CountingSink()
            try:
                with open(path, "rb") as src:
                    write_archive(src, sink, variant_id=variant_id,
                                  model=model, backend=backend,
                                  block_lines=block_lines)
            except BackendError:
                rows.append(BenchRow(corpus, name, original, None, None))
                continue
            ms = int((time.perf_counter() - start) * 1000)
            rows.append(BenchRow(corpus, name, original, sink.count, ms))
    rows.sort(key=lambda r: (r.corpus, r.pipeline))
    return rows


def rows_to_csv(rows: list[BenchRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        if r.skipped:
            lines.append(f"{r.corpus},{r.pipeline},{r.original},skipped,,,")
        elif r.ratio is None:
            lines.append(f"{r.corpus},{r.pipeline},{r.original},{r.compressed},,,{r.ms}")
        else:
            lines.append(f"{r.corpus},{r.pipeline},{r.original},{r.compressed},"
                         f"{r.ratio!r},{r.compaction!r},{r.ms}")
    return "\n".join(lines) + "\n"
