"""Seeded synthetic log corpora: apache access, syslog, and a mixed stream.

Same spec, same bytes — generators draw everything from one seeded RNG so
corpora are reproducible across runs and machines. Lines lean on the
redundancy patterns real logs have: drifting timestamps, skewed (roughly
Zipfian) pools of IPs and paths, and a small set of message templates.
"""

from __future__ import annotations

import datetime
import random
from dataclasses import dataclass
from itertools import islice
from typing import Iterator

STYLES = ("apache", "syslog", "mixed")
MIXED_RUN = 1000

_MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun",
           "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")


@dataclass(frozen=True)
class CorpusSpec:
    style: str
    lines: int
    seed: int

    def __post_init__(self):
        if self.style not in STYLES:
            raise ValueError(f"style must be one of {STYLES}")
        if self.lines < 0:
            raise ValueError("lines must be non-negative")


def _zipf_pool(rng: random.Random, items: list) -> tuple[list, list]:
    weights = [1.0 / (rank + 1) for rank in range(len(items))]
    return items, weights


def _apache_lines(rng: random.Random) -> Iterator[bytes]:
    ips, ip_w = _zipf_pool(rng, [
        f"10.{rng.randrange(256)}.{rng.randrange(256)}.{rng.randrange(256)}"
        for _ in range(4000)])
    words = ["index", "static", "api", "v1", "items", "users", "search",
             "img", "css", "js", "login", "report", "assets", "data"]
    assets = ["/" + "/".join(rng.choice(words) for _ in range(rng.randrange(1, 3)))
              + rng.choice([".css", ".js", ".png", ".svg"])
              for _ in range(150)]
    pages = []
    for _ in range(300):
        page = "/" + "/".join(rng.choice(words) for _ in range(rng.randrange(1, 4)))
        pages.append((page, [rng.choice(assets)
                             for _ in range(rng.randrange(3, 12))]))
    pages, page_w = _zipf_pool(rng, pages)
    base_size: dict[str, int] = {}

    def size_of(path: str) -> int:
        if path not in base_size:
            base_size[path] = rng.randrange(64, 65536)
        base = base_size[path]
        return base if rng.random() < 0.9 else base + rng.randrange(-32, 32)

    monitor_ips = [rng.choices(ips, ip_w)[0] for _ in range(3)]
    ts = datetime.datetime(2024, 3, 17, 10, 0, 0)
    one_sec = datetime.timedelta(seconds=1)
    while True:
        if rng.random() < 0.04:
            # a monitoring agent polls a health endpoint for a while
            ip = rng.choice(monitor_ips)
            path = rng.choice(["/health", "/metrics"])
            burst = [path] * rng.randrange(4, 10)
            method = "GET"
        else:
            ip = rng.choices(ips, ip_w)[0]
            page, page_assets = rng.choices(pages, page_w)[0]
            if rng.random() < 0.3:
                page = f"{page}/{rng.randrange(100000)}"
            burst = [page] + page_assets
            method = "GET" if rng.random() < 0.92 else "POST"
        for path in burst:
            ts = ts + (one_sec if rng.random() < 0.2 else 0 * one_sec)
            stamp = (f"{ts.day:02d}/{_MONTHS[ts.month - 1]}/{ts.year:04d}"
                     f":{ts.hour:02d}:{ts.minute:02d}:{ts.second:02d} +0000")
            status = 200 if rng.random() > 0.02 else rng.choice([304, 404, 500])
            yield (f'{ip} - - [{stamp}] "{method} {path} HTTP/1.1" '
                   f'{status} {size_of(path)}\n').encode()


def _syslog_lines(rng: random.Random) -> Iterator[bytes]:
    hosts = [f"node{rng.randrange(1, 9):02d}" for _ in range(8)]
    users = ["root", "admin", "deploy", "backup", "www"]
    ips = [f"192.168.{rng.randrange(8)}.{rng.randrange(256)}"
           for _ in range(32)]
    templates = [
        "sshd[{pid}]: Accepted password for {user} from {ip} port {port} ssh2",
        "sshd[{pid}]: Connection closed by {ip} port {port}",
        "sshd[{pid}]: Failed password for {user} from {ip} port {port} ssh2",
        "systemd[1]: Started Session {sid} of user {user}.",
        "CRON[{pid}]: ({user}) CMD (run-parts /etc/cron.hourly)",
        "kernel: [{uptime}.{frac}] TCP: request_sock_TCP: Possible SYN flooding on port {port}.",
        "dhclient[{pid}]: DHCPREQUEST for {ip} on eth0 to 192.168.0.1 port 67",
    ]
    templates, template_w = _zipf_pool(rng, templates)
    ts = datetime.datetime(2024, 3, 17, 10, 0, 0)
    one_sec = datetime.timedelta(seconds=1)
    pid = rng.randrange(1000, 5000)
    sid = 100
    uptime = 86000
    while True:
        ts = ts + rng.choice((0, 0, 1, 1, 2, 5)) * one_sec
        if rng.random() < 0.05:
            pid += rng.randrange(1, 4)
        sid += rng.randrange(0, 2)
        uptime += rng.randrange(0, 3)
        host = rng.choice(hosts)
        msg = rng.choices(templates, template_w)[0].format(
            pid=pid, user=rng.choice(users), ip=rng.choice(ips),
            port=rng.randrange(1024, 61000), sid=sid, uptime=uptime,
            frac=rng.randrange(100000, 999999))
        stamp = (f"{_MONTHS[ts.month - 1]} {ts.day:2d} "
                 f"{ts.hour:02d}:{ts.minute:02d}:{ts.second:02d}")
        yield f"{stamp} {host} {msg}\n".encode()


def _mixed_lines(rng: random.Random) -> Iterator[bytes]:
    apache = _apache_lines(random.Random(rng.getrandbits(64)))
    syslog = _syslog_lines(random.Random(rng.getrandbits(64)))
    while True:
        for _ in range(MIXED_RUN):
            yield next(apache)
        for _ in range(MIXED_RUN):
            yield next(syslog)


def generate(spec: CorpusSpec) -> Iterator[bytes]:
    """Yield spec.lines log lines (each including its newline)."""
    rng = random.Random(spec.seed)
    if spec.style == "apache":
        source = _apache_lines(rng)
    elif spec.style == "syslog":
        source = _syslog_lines(rng)
    else:
        source = _mixed_lines(rng)
    return islice(source, spec.lines)


def write_corpus(spec: CorpusSpec, stream) -> int:
    """Stream the corpus into a binary file object; returns bytes written."""
    total = 0
    for line in generate(spec):
        stream.write(line)
        total += len(line)
    return total
