"""
Wikityp Page Fetcher

Async Abruf von Wikipedia-Seiten (Wikitext via action=raw) mit
lokalem Page-Cache. Eine JSON-Datei pro Stadt.
"""

from __future__ import annotations

import asyncio
import json
import os
import re
import tempfile
from collections.abc import AsyncIterator
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from pathlib import Path
from urllib.parse import quote, unquote, urlsplit

import httpx
import structlog

from wikityp.corpus.models import RawPage
from wikityp.errors import PageFetchError, PageMissingError, WikitypError

logger = structlog.get_logger(__name__)

_KEY_UNSAFE = re.compile(r"[^A-Za-z0-9._-]+")


def normalize_url(url: str) -> str:
    """Vergleichbare Form einer Wikipedia-URL (Host klein, Titel dekodiert)."""
    parts = urlsplit(url.strip())
    path = unquote(parts.path).rstrip("/").replace(" ", "_")
    return f"{parts.scheme.lower() or 'https'}://{parts.netloc.lower()}{path}"


def raw_url(url: str) -> str:
    """
    Wandelt eine Artikel-URL in die action=raw URL um.

    https://en.wikipedia.org/wiki/New_York_City
        -> https://en.wikipedia.org/w/index.php?title=New_York_City&action=raw
    """
    parts = urlsplit(url)
    if "/wiki/" not in parts.path:
        return url
    title = unquote(parts.path.split("/wiki/", 1)[1])
    return f"{parts.scheme or 'https'}://{parts.netloc}/w/index.php?title={quote(title)}&action=raw"


def cache_key(url: str, city_id: str | None = None) -> str:
    """Dateiname im Page-Cache: city_id, sonst der Artikeltitel."""
    if city_id:
        return _KEY_UNSAFE.sub("_", city_id)
    path = unquote(urlsplit(url).path)
    title = path.rsplit("/", 1)[-1] or "index"
    return _KEY_UNSAFE.sub("_", title)


class PageCache:
    """
    Dateibasierter Cache für Rohseiten.

    Schreibvorgänge sind atomar (tempfile + os.replace), damit parallele
    Leser nie eine halbe Datei sehen.
    """

    def __init__(self, cache_dir: Path | str) -> None:
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def path_for(self, key: str) -> Path:
        return self.cache_dir / f"{key}.json"

    def read(self, key: str) -> RawPage | None:
        """Liest eine Seite, None bei Cache-Miss."""
        path = self.path_for(key)
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as f:
            return RawPage.model_validate(json.load(f))

    def write(self, key: str, page: RawPage) -> Path:
        """Schreibt eine Seite atomar."""
        path = self.path_for(key)
        fd, tmp = tempfile.mkstemp(dir=self.cache_dir, prefix=f".{key}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(page.model_dump(mode="json"), f, ensure_ascii=False, indent=2)
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        return path

    def keys(self) -> list[str]:
        """Alle gecachten Schlüssel."""
        return sorted(p.stem for p in self.cache_dir.glob("*.json"))


class PageFetcher:
    """
    Wikipedia Page Fetcher.

    Liefert Seiten aus dem Cache oder lädt sie per HTTP nach.
    Netzwerkfehler sind wiederholbar, 404 ist endgültig; beide
    lassen den Cache unverändert.
    """

    def __init__(
        self,
        cache: PageCache,
        *,
        offline: bool = False,
        concurrency: int = 4,
        timeout_seconds: float = 30.0,
        user_agent: str = "wikityp/0.1",
        max_retries: int = 2,
        retry_delay_seconds: float = 1.0,
        transport: httpx.AsyncBaseTransport | None = None,
    ) -> None:
        self.cache = cache
        self.offline = offline
        self.concurrency = concurrency
        self.timeout_seconds = timeout_seconds
        self.user_agent = user_agent
        self.max_retries = max_retries
        self.retry_delay_seconds = retry_delay_seconds
        self._transport = transport
        self._key_locks: dict[str, asyncio.Lock] = {}
        self._lock_users: dict[str, int] = {}

    def _client(self) -> httpx.AsyncClient:
        return httpx.AsyncClient(
            timeout=self.timeout_seconds,
            headers={"User-Agent": self.user_agent},
            follow_redirects=True,
            transport=self._transport,
        )

    @property
    def active_keys(self) -> list[str]:
        """Cache-Keys, für die gerade ein Abruf läuft oder wartet."""
        return sorted(self._key_locks)

    @asynccontextmanager
    async def _locked(self, key: str) -> AsyncIterator[None]:
        """Ein Abruf pro Key; das Lock verschwindet mit dem letzten Nutzer."""
        lock = self._key_locks.setdefault(key, asyncio.Lock())
        self._lock_users[key] = self._lock_users.get(key, 0) + 1
        try:
            async with lock:
                yield
        finally:
            self._lock_users[key] -= 1
            if self._lock_users[key] == 0:
                del self._lock_users[key]
                del self._key_locks[key]

    # =========================================================================
    # Single Page
    # =========================================================================

    async def fetch_page(
        self,
        url: str,
        city_id: str | None = None,
        client: httpx.AsyncClient | None = None,
    ) -> RawPage:
        """
        Holt eine Seite aus dem Cache oder von Wikipedia.

        Raises:
            PageMissingError: HTTP 404
            PageFetchError: Netzwerkfehler, 5xx, oder offline ohne Cache-Eintrag
        """
        key = cache_key(url, city_id)
        async with self._locked(key):
            cached = self.cache.read(key)
            if cached is not None:
                logger.debug("page_cache_hit", key=key)
                return cached

            if self.offline:
                raise PageFetchError(f"offline and not cached: {url}")

            if client is None:
                async with self._client() as own_client:
                    page = await self._download(own_client, url)
            else:
                page = await self._download(client, url)

            self.cache.write(key, page)
            logger.info("page_fetched", key=key, url=url, chars=len(page.markup))
            return page

    async def _download(self, client: httpx.AsyncClient, url: str) -> RawPage:
        """HTTP-Abruf mit Wiederholung bei Netzwerkfehlern."""
        target = raw_url(url)
        last_error: Exception | None = None

        for attempt in range(self.max_retries + 1):
            try:
                response = await client.get(target)
            except httpx.TransportError as e:
                last_error = e
                logger.warning("page_fetch_retry", url=url, attempt=attempt, error=str(e))
                await asyncio.sleep(self.retry_delay_seconds * (attempt + 1))
                continue

            if response.status_code == 404:
                raise PageMissingError(f"page missing: {url}")
            if response.status_code >= 500:
                last_error = PageFetchError(f"HTTP {response.status_code} for {url}")
                logger.warning(
                    "page_fetch_retry", url=url, attempt=attempt, status=response.status_code
                )
                await asyncio.sleep(self.retry_delay_seconds * (attempt + 1))
                continue
            if response.status_code >= 400:
                raise PageMissingError(f"HTTP {response.status_code} for {url}")

            return RawPage(
                url=url,
                markup=response.text,
                fetched_at=datetime.now(timezone.utc),
                title=unquote(urlsplit(url).path.rsplit("/", 1)[-1]).replace("_", " "),
            )

        raise PageFetchError(f"network failure for {url}: {last_error}")

    # =========================================================================
    # Batch
    # =========================================================================

    async def fetch_pages(
        self, items: list[tuple[str, str]]
    ) -> dict[str, RawPage | WikitypError]:
        """
        Holt viele Seiten mit begrenzter Parallelität.

        Args:
            items: Liste von (city_id, url)

        Returns:
            Dict city_id -> RawPage oder der aufgetretene Fehler
        """
        semaphore = asyncio.Semaphore(self.concurrency)
        results: dict[str, RawPage | WikitypError] = {}

        async with self._client() as client:

            async def _one(city_id: str, url: str) -> None:
                async with semaphore:
                    try:
                        results[city_id] = await self.fetch_page(url, city_id, client)
                    except (PageMissingError, PageFetchError) as e:
                        logger.warning("page_fetch_failed", city_id=city_id, error=str(e))
                        results[city_id] = e

            await asyncio.gather(*(_one(cid, url) for cid, url in items))

        return {cid: results[cid] for cid, _ in items}
