"""Append-only JSON-lines cache of point counts keyed by model content."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

from filelock import FileLock


class CacheConflict(RuntimeError):
    pass


@dataclass(frozen=True)
class CountRecord:
    model_hash: str
    p: int
    count: int
    mode: str = "projective"

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.model_hash, self.p, self.mode)


class CountCache:
    """Single-writer/multi-reader store; appends are made under a file lock."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = FileLock(str(self.path) + ".lock")
        self._records: dict[tuple[str, int, str], CountRecord] = {}
        self._mtime = None
        self._reload()

    def _reload(self) -> None:
        if not self.path.exists():
            return
        stat = self.path.stat()
        if self._mtime == (stat.st_mtime_ns, stat.st_size):
            return
        records = {}
        with self.path.open() as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = CountRecord(**json.loads(line))
                old = records.get(rec.key)
                if old is not None and old.count != rec.count:
                    raise CacheConflict(f"cache file holds conflicting counts for {rec.key}")
                records[rec.key] = rec
        self._records = records
        self._mtime = (stat.st_mtime_ns, stat.st_size)

    def get(self, model_hash: str, p: int, mode: str = "projective") -> CountRecord | None:
        self._reload()
        return self._records.get((model_hash, p, mode))

    def put(self, record: CountRecord) -> CountRecord:
        self.put_many([record])
        return record

    def put_many(self, records) -> None:
        with self._lock:
            self._reload()
            fresh = []
            for rec in records:
                old = self._records.get(rec.key)
                if old is not None:
                    if old.count != rec.count:
                        raise CacheConflict(f"{rec.key}: cached {old.count}, new {rec.count}")
                    continue
                fresh.append(rec)
            if not fresh:
                return
            with self.path.open("a") as fh:
                for rec in fresh:
                    fh.write(json.dumps(asdict(rec), sort_keys=True) + "\n")
                    self._records[rec.key] = rec
                fh.flush()
                os.fsync(fh.fileno())

    def __len__(self) -> int:
        self._reload()
        return len(self._records)

    def records(self) -> list[CountRecord]:
        self._reload()
        return list(self._records.values())


def cache_get(cache: CountCache, model_hash: str, p: int, mode: str = "projective") -> CountRecord | None:
    return cache.get(model_hash, p, mode)


def cache_put(cache: CountCache, record: CountRecord) -> CountRecord:
    return cache.put(record)
