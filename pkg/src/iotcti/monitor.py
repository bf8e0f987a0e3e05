"""Keyword-filtered stream monitoring.

Events come from an event source (a replay file or the live filtered-stream
adapter), are filtered by keyword, classified, and related ones are emitted
as alerts. Statistics are accumulated over the run.
"""
from __future__ import annotations

import json
import logging
import os
import re
import sys
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Callable, Iterable, Iterator, Sequence

from .pipeline import Pipeline

log = logging.getLogger(__name__)

DEFAULT_KEYWORDS = (
    "IoT",
    "iotvulnerability",
    "exploitIOT",
    "remote attacker",
    "cyberSecurity",
    "cyberAttack",
    "snapdragon",
    "IoTsecurity",
    "CVE",
    "affected device",
    "devices firmware",
)


def parse_timestamp(value: str) -> datetime:
    """Parse an RFC 3339 timestamp (a trailing ``Z`` is accepted)."""
    if not isinstance(value, str) or not value:
        raise ValueError("timestamp must be a non-empty string")
    v = value[:-1] + "+00:00" if value.endswith(("Z", "z")) else value
    ts = datetime.fromisoformat(v)
    if ts.tzinfo is None:
        raise ValueError(f"timestamp {value!r} has no UTC offset")
    return ts


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds").replace("+00:00", "Z")


@dataclass(frozen=True)
class TweetEvent:
    event_id: str
    created_at: str
    text: str
    is_retweet: bool = False
    author: str = ""

    def __post_init__(self):
        if not self.event_id:
            raise ValueError("event_id must be non-empty")
        parse_timestamp(self.created_at)

    @classmethod
    def from_record(cls, obj: dict) -> "TweetEvent":
        """Build from a replay/capture record (keys id, created_at, text, retweeted, user)."""
        text = obj["text"]
        if not isinstance(text, str):
            raise TypeError("text must be a string")
        return cls(str(obj["id"]), obj["created_at"], text, bool(obj.get("retweeted", False)), str(obj.get("user", "")))

    def to_record(self) -> dict:
        return {
            "id": self.event_id,
            "created_at": self.created_at,
            "text": self.text,
            "retweeted": self.is_retweet,
            "user": self.author,
        }


@dataclass(frozen=True)
class Alert:
    event_id: str
    score: float
    matched_keywords: list
    emitted_at: str
    seq: int
    label: str = "related"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MonitorStats:
    collected: int = 0
    related: int = 0
    unrelated: int = 0
    retweets: int = 0
    filtered_out: int = 0
    partial: bool = False
    error: str | None = None

    @property
    def harvest_rate_total(self) -> float | None:
        return self.related / self.collected if self.collected else None

    @property
    def harvest_rate_vs_unrelated(self) -> float | None:
        return self.related / self.unrelated if self.unrelated else None

    @property
    def retweet_fraction(self) -> float | None:
        return self.retweets / self.collected if self.collected else None

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(
            harvest_rate_total=self.harvest_rate_total,
            harvest_rate_vs_unrelated=self.harvest_rate_vs_unrelated,
            retweet_fraction=self.retweet_fraction,
        )
        return out


# -- keyword filter --------------------------------------------------------

def _keyword_pattern(keyword: str) -> re.Pattern:
    words = keyword.split()
    if not words:
        raise ValueError("empty keyword")
    if len(words) == 1:
        return re.compile(r"(?<![^\W_])" + re.escape(words[0]) + r"(?![^\W_])", re.IGNORECASE)
    return re.compile(re.escape(" ".join(words)), re.IGNORECASE)


def compile_keywords(keywords: Sequence[str]) -> list[tuple[str, re.Pattern]]:
    if not keywords:
        raise ValueError("keyword list must be non-empty")
    return [(k, _keyword_pattern(k)) for k in keywords]


def keyword_match(text: str, keywords: Sequence[str] | Sequence[tuple[str, re.Pattern]] = DEFAULT_KEYWORDS):
    """Return ``(matched?, matched keywords in list order)``.

    Single-word keywords must sit on token boundaries (``IoT`` does not match
    ``biotic``); multi-word keywords match as substrings after runs of
    whitespace in the text are collapsed to one space.
    """
    compiled = keywords if keywords and isinstance(keywords[0], tuple) else compile_keywords(keywords)
    normalized = " ".join(text.split())
    matched = [k for k, pat in compiled if pat.search(normalized)]
    return bool(matched), matched


def load_keywords(path: str | Path) -> list[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]


# -- event sources ---------------------------------------------------------

class ReplaySource:
    """Events from a JSONL capture file, in file order.

    Malformed lines are skipped; ``skipped`` holds their count once the
    iterator is exhausted. The file is opened when the source is created so
    an unreadable path fails before any event is produced.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.skipped = 0
        self._fh = open(self.path, encoding="utf-8", errors="replace")

    def __iter__(self) -> Iterator[TweetEvent]:
        with self._fh as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    yield TweetEvent.from_record(json.loads(line))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError, AttributeError) as exc:
                    self.skipped += 1
                    log.debug("%s:%d skipped: %s", self.path, lineno, exc)


def replay_source(path: str | Path) -> ReplaySource:
    return ReplaySource(path)


def write_replay(events: Iterable[TweetEvent], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ev in events:
            fh.write(json.dumps(ev.to_record(), ensure_ascii=False) + "\n")


class LiveStreamSource:
    """Filtered-stream adapter for the Twitter v2 API.

    Installs one rule per keyword, then yields events from the streaming
    endpoint. The bearer token is read from the environment variable named by
    ``token_env``. Requires network access; not exercised by the test suite.
    """

    def __init__(
        self,
        keywords: Sequence[str] = DEFAULT_KEYWORDS,
        endpoint: str = "https://api.twitter.com/2/tweets/search/stream",
        token_env: str = "TWITTER_BEARER_TOKEN",
        timeout: float = 90.0,
    ):
        self.keywords = list(keywords)
        self.endpoint = endpoint.rstrip("/")
        self.token_env = token_env
        self.timeout = timeout
        self.skipped = 0

    def _headers(self) -> dict:
        token = os.environ.get(self.token_env)
        if not token:
            raise RuntimeError(f"environment variable {self.token_env} is not set")
        return {"Authorization": f"Bearer {token}"}

    def install_rules(self, session) -> None:
        rules_url = self.endpoint + "/rules"
        current = session.get(rules_url, headers=self._headers(), timeout=self.timeout).json()
        ids = [r["id"] for r in current.get("data", [])]
        if ids:
            session.post(rules_url, headers=self._headers(), json={"delete": {"ids": ids}}, timeout=self.timeout)
        add = [{"value": f'"{k}"' if " " in k else k, "tag": k} for k in self.keywords]
        resp = session.post(rules_url, headers=self._headers(), json={"add": add}, timeout=self.timeout)
        resp.raise_for_status()

    def __iter__(self) -> Iterator[TweetEvent]:
        import requests

        with requests.Session() as session:
            self.install_rules(session)
            params = {"tweet.fields": "created_at,author_id,referenced_tweets"}
            with session.get(self.endpoint, headers=self._headers(), params=params, stream=True, timeout=self.timeout) as resp:
                resp.raise_for_status()
                for line in resp.iter_lines():
                    if not line:
                        continue
                    try:
                        data = json.loads(line)["data"]
                        refs = data.get("referenced_tweets") or []
                        yield TweetEvent(
                            data["id"],
                            data["created_at"],
                            data["text"],
                            any(r.get("type") == "retweeted" for r in refs),
                            data.get("author_id", ""),
                        )
                    except (KeyError, ValueError, TypeError):
                        self.skipped += 1


# -- sinks -----------------------------------------------------------------

class ListSink:
    """In-memory sink, mostly for tests and notebooks."""

    def __init__(self):
        self.alerts: list[Alert] = []
        self.stats: MonitorStats | None = None

    def emit(self, alert: Alert) -> None:
        self.alerts.append(alert)

    def finish(self, stats: MonitorStats) -> None:
        self.stats = stats


class JsonlSink:
    """Writes one JSON object per alert; final stats go to ``stats_path`` if given.

    With ``timestamps_path`` the ``emitted_at`` field is moved to a sidecar
    JSONL file keyed by ``seq`` so the main alert file is reproducible.
    """

    def __init__(self, stream: IO[str] | None = None, stats_path=None, timestamps_path=None):
        self.stream = stream if stream is not None else sys.stdout
        self.stats_path = stats_path
        self._ts = open(timestamps_path, "w", encoding="utf-8", newline="\n") if timestamps_path else None

    @classmethod
    def to_file(cls, path: str | Path, stats_path=None, timestamps_path=None) -> "JsonlSink":
        return cls(open(path, "w", encoding="utf-8", newline="\n"), stats_path, timestamps_path)

    def emit(self, alert: Alert) -> None:
        rec = alert.to_dict()
        if self._ts is not None:
            self._ts.write(json.dumps({"seq": alert.seq, "emitted_at": rec.pop("emitted_at")}) + "\n")
        self.stream.write(json.dumps(rec, sort_keys=True) + "\n")

    def finish(self, stats: MonitorStats) -> None:
        self.stream.flush()
        if self.stats_path is not None:
            Path(self.stats_path).write_text(json.dumps(stats.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")

    def close(self) -> None:
        if self._ts is not None:
            self._ts.close()
        if self.stream is not sys.stdout:
            self.stream.close()


# -- monitoring loop -------------------------------------------------------

@dataclass
class StopCondition:
    max_events: int | None = None
    max_seconds: float | None = None
    _started: float = field(default=0.0, repr=False)

    def start(self) -> None:
        self._started = time.monotonic()

    def reached(self, n_seen: int) -> bool:
        if self.max_events is not None and n_seen >= self.max_events:
            return True
        return self.max_seconds is not None and time.monotonic() - self._started >= self.max_seconds


def _batches(source: Iterable[TweetEvent], size: int, stop: StopCondition):
    batch, seen = [], 0
    for ev in source:
        if stop.reached(seen):
            break
        seen += 1
        batch.append(ev)
        if len(batch) >= size:
            yield batch
            batch = []
    if batch:
        yield batch


def _bounded_map(pool: ThreadPoolExecutor, fn, items, window: int):
    # like pool.map, but never more than ``window`` items in flight
    pending: deque = deque()
    for item in items:
        pending.append(pool.submit(fn, item))
        if len(pending) >= window:
            yield pending.popleft().result()
    while pending:
        yield pending.popleft().result()


def run_monitor(
    source: Iterable[TweetEvent],
    pipeline: Pipeline,
    sink,
    stop: StopCondition | None = None,
    keywords: Sequence[str] = DEFAULT_KEYWORDS,
    exclude_retweets: bool = False,
    workers: int = 1,
    batch_size: int = 64,
    clock: Callable[[], str] = utc_now,
) -> MonitorStats:
    """Filter, classify and alert on every event from ``source``.

    ``stop`` bounds the run by event count and/or wall-clock seconds (counted
    over events delivered by the source). Only keyword-matching events count
    as collected. With ``workers > 1`` batches are classified in a thread pool;
    alerts are still numbered and emitted in event order.
    """
    stop = stop or StopCondition()
    stop.start()
    compiled = compile_keywords(keywords)
    stats = MonitorStats()
    seq = 0

    def classify(batch: list[TweetEvent]):
        kept = []
        for ev in batch:
            if exclude_retweets and ev.is_retweet:
                continue
            ok, matched = keyword_match(ev.text, compiled)
            if ok:
                kept.append((ev, matched))
        scores = pipeline.score([ev.text for ev, _ in kept]) if kept else []
        return len(batch), [(ev, matched, float(s)) for (ev, matched), s in zip(kept, scores)]

    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        batches = _batches(source, batch_size, stop)
        results = _bounded_map(pool, classify, batches, 2 * workers) if pool else map(classify, batches)
        for n_batch, items in results:
            stats.filtered_out += n_batch - len(items)
            for ev, matched, score in items:
                stats.collected += 1
                stats.retweets += ev.is_retweet
                if score > 0.5:
                    stats.related += 1
                    seq += 1
                    sink.emit(Alert(ev.event_id, score, matched, clock(), seq))
                else:
                    stats.unrelated += 1
    except Exception as exc:  # noqa: BLE001 - any source/sink failure ends the run
        stats.partial = True
        stats.error = f"{type(exc).__name__}: {exc}"
        log.error("monitor aborted: %s", stats.error)
    finally:
        if pool:
            pool.shutdown(wait=True, cancel_futures=True)
    try:
        sink.finish(stats)
    except Exception as exc:  # noqa: BLE001
        stats.partial = True
        stats.error = stats.error or f"{type(exc).__name__}: {exc}"
    return stats
