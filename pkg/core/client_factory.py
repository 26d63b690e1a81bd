"""
Client Factory

Builds service clients from the clients config section. Each service runs
from the fixture directory or from its live endpoint:

    fixture  always the fixture directory
    live     always the endpoint (CONVERGEX_ENDPOINT_<SERVICE> or
             clients.endpoints.<service>), bearer token from
             CONVERGEX_TOKEN_<SERVICE>
    auto     the fixture directory when one is configured, the endpoint
             otherwise

Clients are created on first use, so a run only needs the services it
actually calls.
"""

import logging
import os
import threading
from typing import Any, Callable, Dict, Mapping, Optional

import httpx

from core.llm_integration import Summarizer, ZeroShotClassifier
from core.media_services import Ocr, PlaylistSearch, Transcriber, WebSearch
from core.service_base import FixtureStore, JsonHttpService, RetryPolicy, ServiceClient
from core.vector_services import Embedder, PairScorer
from utils.errors import ConfigError

logger = logging.getLogger("convergex.clients")

SERVICES = ("transcriber", "ocr", "summarizer", "embedder", "pair_scorer",
            "web_search", "zero_shot", "playlist_search")


class ClientFactory:
    def __init__(self, config: Mapping[str, Any],
                 environ: Optional[Mapping[str, str]] = None,
                 http_client: Optional[httpx.Client] = None,
                 sleep: Optional[Callable[[float], None]] = None):
        """
        Args:
            config: Full configuration (clients, retrieval, tokenizer sections)
            environ: Environment mapping (defaults to os.environ)
            http_client: Shared httpx client for live calls
            sleep: Backoff sleep override
        """
        self.config = config
        self.clients_cfg = config["clients"]
        self.environ = os.environ if environ is None else environ
        self._http_client = http_client
        self._sleep = sleep
        self._cache: Dict[str, ServiceClient] = {}
        self._lock = threading.Lock()

    def mode_for(self, service: str) -> str:
        mode = self.clients_cfg["mode"]
        if mode == "auto":
            return "fixture" if self.clients_cfg.get("fixture_dir") else "live"
        return mode

    def endpoint_for(self, service: str) -> Optional[str]:
        return (self.environ.get(f"CONVERGEX_ENDPOINT_{service.upper()}")
                or self.clients_cfg["endpoints"].get(service))

    def _wiring(self, service: str) -> Dict[str, Any]:
        if service not in SERVICES:
            raise ConfigError(f"Unknown service: {service}")
        if self.mode_for(service) == "fixture":
            root = self.clients_cfg.get("fixture_dir")
            if not root:
                raise ConfigError("clients.mode is fixture but no fixture directory is configured")
            logger.debug(f"service={service} mode=fixture root={root}")
            return {"fixtures": FixtureStore(root, service)}

        endpoint = self.endpoint_for(service)
        if not endpoint:
            raise ConfigError(
                f"no endpoint for {service}: set CONVERGEX_ENDPOINT_{service.upper()}, "
                f"clients.endpoints.{service} or a fixture directory"
            )
        if self._http_client is None:
            self._http_client = httpx.Client()
        policy = RetryPolicy(
            retries=self.clients_cfg["retries"],
            backoff_base_s=self.clients_cfg["backoff_base_s"],
            backoff_factor=self.clients_cfg["backoff_factor"],
            timeout_s=self.clients_cfg["timeout_s"],
        )
        extra = {"sleep": self._sleep} if self._sleep is not None else {}
        http = JsonHttpService(service, endpoint, self.environ.get(f"CONVERGEX_TOKEN_{service.upper()}"),
                               policy, self._http_client, **extra)
        logger.debug(f"service={service} mode=live endpoint={endpoint}")
        return {"http": http}

    def _get(self, service: str, build: Callable[[Dict[str, Any]], ServiceClient]) -> ServiceClient:
        with self._lock:
            if service not in self._cache:
                self._cache[service] = build(self._wiring(service))
            return self._cache[service]

    @property
    def summarizer(self) -> Summarizer:
        return self._get("summarizer", lambda w: Summarizer(
            **w,
            echo_sentences=self.clients_cfg["echo_sentences"],
            abbreviations=self.config["tokenizer"]["abbreviations"],
        ))

    @property
    def classifier(self) -> ZeroShotClassifier:
        return self._get("zero_shot", lambda w: ZeroShotClassifier(**w))

    @property
    def transcriber(self) -> Transcriber:
        return self._get("transcriber", lambda w: Transcriber(**w))

    @property
    def ocr(self) -> Ocr:
        return self._get("ocr", lambda w: Ocr(**w))

    @property
    def playlist_search(self) -> PlaylistSearch:
        return self._get("playlist_search", lambda w: PlaylistSearch(**w))

    @property
    def web_search(self) -> WebSearch:
        return self._get("web_search", lambda w: WebSearch(**w))

    @property
    def embedder(self) -> Embedder:
        return self._get("embedder", lambda w: Embedder(**w, dim=self.config["retrieval"]["dim"]))

    @property
    def pair_scorer(self) -> PairScorer:
        return self._get("pair_scorer", lambda w: PairScorer(**w))

    def close(self) -> None:
        if self._http_client is not None:
            self._http_client.close()
