"""OpenAlex works ingestion: cursor-paginated fetch into an NDJSON cache, and parsing."""

from __future__ import annotations

import json
import logging
import os
import re
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Mapping

import requests

from .errors import (
    EmptyReference,
    MalformedResponse,
    MissingId,
    MissingYear,
    NetworkError,
    RateLimited,
)

log = logging.getLogger(__name__)

OPENALEX_API = "https://api.openalex.org"
PER_PAGE = 200
MAX_ATTEMPTS = 5
MAX_RATE_LIMIT_WAITS = 10
YEAR_MIN, YEAR_MAX = 1900, 2100

_ID_PREFIX = re.compile(r"^https?://(?:www\.)?openalex\.org/", re.IGNORECASE)
_CANONICAL_ID = re.compile(r"^[A-Za-z]\d+$")
_DOI_PREFIX = re.compile(r"^(?:https?://(?:dx\.)?doi\.org/|doi:)", re.IGNORECASE)


def normalize_openalex_id(value: str | None) -> str:
    """Strip the ``https://openalex.org/`` prefix; empty string for missing values.

    Canonical IDs (one letter then digits) get an upper-case letter.
    """
    if not value:
        return ""
    value = _ID_PREFIX.sub("", str(value).strip())
    return value.upper() if _CANONICAL_ID.match(value) else value


def normalize_doi(doi: str | None) -> str | None:
    if not doi:
        return None
    doi = _DOI_PREFIX.sub("", str(doi).strip()).strip().lower()
    return doi or None


@dataclass(frozen=True)
class InstitutionQuery:
    institution_id: str = ""
    fallback_affiliation_search: str = ""
    year_start: int = 2004
    year_end: int = 2023

    def __post_init__(self):
        if self.year_start > self.year_end:
            raise ValueError(f"year_start {self.year_start} > year_end {self.year_end}")
        if bool(self.institution_id) == bool(self.fallback_affiliation_search):
            raise ValueError(
                "exactly one of institution_id / fallback_affiliation_search must be set"
            )
        if self.institution_id:
            object.__setattr__(self, "institution_id", normalize_openalex_id(self.institution_id))

    @property
    def filter_string(self) -> str:
        years = f"publication_year:{self.year_start}-{self.year_end}"
        if self.institution_id:
            return f"authorships.institutions.id:{self.institution_id},{years}"
        return f"raw_affiliation_strings.search:{self.fallback_affiliation_search},{years}"

    @property
    def cache_stem(self) -> str:
        name = self.institution_id or re.sub(
            r"[^a-z0-9]+", "-", self.fallback_affiliation_search.lower()
        ).strip("-")
        return f"{name}_{self.year_start}_{self.year_end}"


@dataclass(frozen=True)
class Authorship:
    author_id: str
    institution_ids: frozenset[str] = frozenset()


@dataclass(frozen=True)
class WorkRecord:
    work_id: str
    year: int
    authorships: tuple[Authorship, ...] = ()
    doi: str | None = None

    def __post_init__(self):
        if not self.work_id:
            raise MissingId("work_id must be non-empty")
        if not YEAR_MIN <= self.year <= YEAR_MAX:
            raise ValueError(f"year {self.year} outside [{YEAR_MIN}, {YEAR_MAX}]")
        seen: dict[str, set[str]] = {}
        for a in self.authorships:
            if not a.author_id:
                raise ValueError("authorship with empty author_id")
            seen.setdefault(a.author_id, set()).update(a.institution_ids)
        if len(seen) != len(self.authorships):
            merged = tuple(Authorship(k, frozenset(v)) for k, v in seen.items())
            object.__setattr__(self, "authorships", merged)

    @property
    def author_ids(self) -> list[str]:
        return [a.author_id for a in self.authorships]

    def to_raw(self) -> dict[str, Any]:
        """Render in the OpenAlex works JSON shape used by the NDJSON cache."""
        return {
            "id": f"https://openalex.org/{self.work_id}",
            "doi": f"https://doi.org/{self.doi}" if self.doi else None,
            "publication_year": self.year,
            "authorships": [
                {
                    "author": {"id": f"https://openalex.org/{a.author_id}"},
                    "institutions": [
                        {"id": f"https://openalex.org/{i}"} for i in sorted(a.institution_ids)
                    ],
                }
                for a in self.authorships
            ],
        }


def parse_work(raw: Mapping[str, Any]) -> WorkRecord:
    """Map one raw OpenAlex work to a :class:`WorkRecord`.

    Raises :class:`MissingId` when the record has no usable ``id`` and
    :class:`MissingYear` when ``publication_year`` is absent or out of range.
    Authorships without an author ID are dropped with a warning.
    """
    if not isinstance(raw, Mapping):
        raise MissingId("record is not a JSON object")
    work_id = normalize_openalex_id(raw.get("id"))
    if not work_id:
        raise MissingId("record has no id")
    year = raw.get("publication_year")
    if isinstance(year, bool) or not isinstance(year, (int, float, str)):
        raise MissingYear(f"{work_id}: missing publication_year")
    try:
        year = int(year)
    except (TypeError, ValueError):
        raise MissingYear(f"{work_id}: unparseable publication_year {year!r}") from None
    if not YEAR_MIN <= year <= YEAR_MAX:
        raise MissingYear(f"{work_id}: publication_year {year} out of range")

    merged: dict[str, set[str]] = {}
    authorships = raw.get("authorships") or []
    if not isinstance(authorships, list):
        authorships = []
    for a in authorships:
        if not isinstance(a, Mapping):
            continue
        author = a.get("author") or {}
        author_id = normalize_openalex_id(author.get("id")) if isinstance(author, Mapping) else ""
        if not author_id:
            log.warning("%s: dropping authorship without author id", work_id)
            continue
        insts = merged.setdefault(author_id, set())
        for inst in a.get("institutions") or []:
            if isinstance(inst, Mapping):
                inst_id = normalize_openalex_id(inst.get("id"))
                if inst_id:
                    insts.add(inst_id)
    return WorkRecord(
        work_id=work_id,
        year=year,
        doi=normalize_doi(raw.get("doi")),
        authorships=tuple(Authorship(k, frozenset(v)) for k, v in merged.items()),
    )


@dataclass
class ParseStats:
    parsed: int = 0
    missing_year: int = 0
    rejected: int = 0
    duplicates: int = 0


def iter_cache(path: str | os.PathLike) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def parse_records(raws: Iterable[Mapping[str, Any]]) -> tuple[list[WorkRecord], ParseStats]:
    """Parse raw records, skipping bad ones and collapsing repeated work IDs."""
    stats = ParseStats()
    works: list[WorkRecord] = []
    seen: set[str] = set()
    for raw in raws:
        try:
            work = parse_work(raw)
        except MissingYear:
            stats.missing_year += 1
            continue
        except MissingId:
            stats.rejected += 1
            continue
        if work.work_id in seen:
            stats.duplicates += 1
            continue
        seen.add(work.work_id)
        works.append(work)
        stats.parsed += 1
    if stats.missing_year or stats.rejected:
        log.info(
            "parsed %d works (%d without year, %d rejected)",
            stats.parsed, stats.missing_year, stats.rejected,
        )
    return works, stats


def load_works(path: str | os.PathLike) -> tuple[list[WorkRecord], ParseStats]:
    return parse_records(iter_cache(path))


def doi_overlap(set_a: Iterable[str], set_b: Iterable[str]) -> float:
    """Fraction of reference DOIs (``set_a``) also present in ``set_b``."""
    a = {d for d in map(normalize_doi, set_a) if d}
    if not a:
        raise EmptyReference("reference DOI set is empty")
    b = {d for d in map(normalize_doi, set_b) if d}
    return len(a & b) / len(a)


# --- cache + fetch -----------------------------------------------------------


@dataclass
class CacheManifest:
    query: InstitutionQuery
    fetched_at: str = ""
    record_count: int = 0
    cursor_state: str = "*"

    @property
    def complete(self) -> bool:
        return self.cursor_state == "complete"

    def save(self, path: Path) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(json.dumps(asdict(self), indent=2, sort_keys=True), encoding="utf-8")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | os.PathLike) -> CacheManifest:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        data["query"] = InstitutionQuery(**data["query"])
        return cls(**data)


def cache_paths(query: InstitutionQuery, cache_dir: str | os.PathLike) -> tuple[Path, Path]:
    cache_dir = Path(cache_dir)
    return (
        cache_dir / f"{query.cache_stem}.ndjson",
        cache_dir / f"{query.cache_stem}.manifest.json",
    )


def _truncate_lines(path: Path, n_lines: int) -> None:
    """Drop lines beyond ``n_lines`` (left by a crash between append and manifest write)."""
    with open(path, "rb+") as fh:
        count = 0
        while count < n_lines:
            if not fh.readline():
                return
            count += 1
        fh.truncate()


@dataclass
class OpenAlexClient:
    """Thin GET wrapper with retry, backoff and 429 handling."""

    base_url: str = OPENALEX_API
    mailto: str | None = None
    session: Any = field(default_factory=requests.Session)
    sleep: Callable[[float], None] = time.sleep
    timeout: float = 60.0
    backoff: float = 1.0

    def get_json(self, endpoint: str, params: dict[str, Any]) -> dict:
        params = dict(params)
        if self.mailto:
            params["mailto"] = self.mailto
        url = f"{self.base_url.rstrip('/')}/{endpoint.lstrip('/')}"
        attempts = 0
        rate_waits = 0
        while True:
            try:
                resp = self.session.get(url, params=params, timeout=self.timeout)
            except requests.RequestException as exc:
                attempts += 1
                if attempts >= MAX_ATTEMPTS:
                    raise NetworkError(f"GET {url} failed after {attempts} attempts: {exc}") from exc
                self.sleep(self.backoff * 2 ** (attempts - 1))
                continue
            if resp.status_code == 429:
                rate_waits += 1
                if rate_waits > MAX_RATE_LIMIT_WAITS:
                    raise RateLimited(f"GET {url}: still rate limited after {rate_waits - 1} waits")
                self.sleep(_retry_after(resp, self.backoff * 2 ** min(rate_waits - 1, 6)))
                continue
            if resp.status_code >= 500:
                attempts += 1
                if attempts >= MAX_ATTEMPTS:
                    raise NetworkError(f"GET {url}: HTTP {resp.status_code} after {attempts} attempts")
                self.sleep(self.backoff * 2 ** (attempts - 1))
                continue
            if resp.status_code != 200:
                raise NetworkError(f"GET {url}: HTTP {resp.status_code}")
            try:
                payload = resp.json()
            except ValueError as exc:
                raise MalformedResponse(f"GET {url}: body is not JSON") from exc
            if not isinstance(payload, dict):
                raise MalformedResponse(f"GET {url}: expected a JSON object")
            return payload


def _retry_after(resp: Any, default: float) -> float:
    value = getattr(resp, "headers", {}).get("Retry-After")
    try:
        return max(0.0, float(value))
    except (TypeError, ValueError):
        return default


def resolve_institution(name: str, client: OpenAlexClient | None = None) -> str:
    """Look up an institution ID by free-text name via the institutions search endpoint."""
    client = client or OpenAlexClient()
    payload = client.get_json("institutions", {"search": name, "per-page": 1})
    results = payload.get("results")
    if not isinstance(results, list):
        raise MalformedResponse("institutions search: missing results")
    if not results:
        raise LookupError(f"no OpenAlex institution matches {name!r}")
    return normalize_openalex_id(results[0].get("id"))


def fetch_works(
    query: InstitutionQuery,
    cache_dir: str | os.PathLike,
    politeness_email: str | None = None,
    client: OpenAlexClient | None = None,
) -> int:
    """Fetch every work matching ``query`` into the NDJSON cache; returns the total count.

    The manifest is rewritten after each appended page, so an interrupted run
    resumes from the last stored cursor. A complete cache is left untouched.
    """
    client = client or OpenAlexClient(mailto=politeness_email)
    if politeness_email and not client.mailto:
        client.mailto = politeness_email
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    data_path, manifest_path = cache_paths(query, cache_dir)

    if manifest_path.exists():
        manifest = CacheManifest.load(manifest_path)
        if manifest.complete:
            log.info("cache %s already complete (%d records)", data_path.name, manifest.record_count)
            return manifest.record_count
        if data_path.exists():
            _truncate_lines(data_path, manifest.record_count)
        else:
            manifest.record_count, manifest.cursor_state = 0, "*"
    else:
        manifest = CacheManifest(query=query)
        data_path.write_bytes(b"")

    params = {"filter": query.filter_string, "per-page": PER_PAGE}
    while not manifest.complete:
        payload = client.get_json("works", {**params, "cursor": manifest.cursor_state})
        results = payload.get("results")
        meta = payload.get("meta")
        if not isinstance(results, list) or not isinstance(meta, dict):
            raise MalformedResponse(
                f"works page at cursor {manifest.cursor_state!r} lacks results/meta"
            )
        with open(data_path, "a", encoding="utf-8") as fh:
            for rec in results:
                fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
        manifest.record_count += len(results)
        next_cursor = meta.get("next_cursor")
        manifest.cursor_state = next_cursor if (results and next_cursor) else "complete"
        manifest.fetched_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
        manifest.save(manifest_path)
        log.info("fetched %d records so far", manifest.record_count)
    return manifest.record_count


def find_cache(path: str | os.PathLike) -> tuple[Path, CacheManifest | None]:
    """Resolve a cache directory or file to its NDJSON path and manifest (if any)."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.ndjson"))
        if len(files) != 1:
            raise FileNotFoundError(
                f"{path}: expected exactly one .ndjson cache file, found {len(files)}"
            )
        path = files[0]
    manifest_path = path.with_name(path.name[: -len(".ndjson")] + ".manifest.json")
    manifest = CacheManifest.load(manifest_path) if manifest_path.exists() else None
    return path, manifest
