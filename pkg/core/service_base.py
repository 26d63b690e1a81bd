"""
Service Base

Shared plumbing for every external service client: a JSON-over-HTTP caller
with retries, exponential backoff with full jitter and an overall deadline,
and a fixture store that answers requests from files keyed by the SHA-256 of
the canonical request.
"""

import hashlib
import json
import logging
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Union

import httpx

from utils.errors import ServiceError
from utils.logger import log_api_request, log_service_call
from utils.state_manager import canonical_json

logger = logging.getLogger("convergex.clients")


@dataclass(frozen=True)
class RetryPolicy:
    retries: int = 3
    backoff_base_s: float = 0.2
    backoff_factor: float = 2.0
    timeout_s: float = 60.0

    def delay(self, attempt: int, rng: random.Random) -> float:
        """Full jitter: uniform in [0, base * factor ** attempt]"""
        return rng.uniform(0.0, self.backoff_base_s * self.backoff_factor ** attempt)


def request_key(request: Mapping[str, Any]) -> str:
    return hashlib.sha256(canonical_json(request, indent=None).encode("utf-8")).hexdigest()


class FixtureStore:
    """
    Stored responses for one service under <root>/<service>/<sha256>.json,
    each file holding {"request": ..., "response": ...}.
    """

    def __init__(self, root: Union[str, Path], service: str):
        self.root = Path(root)
        self.service = service

    def path_for(self, request: Mapping[str, Any]) -> Path:
        return self.root / self.service / f"{request_key(request)}.json"

    def lookup(self, request: Mapping[str, Any]) -> Optional[Any]:
        """
        The stored response, or None when no fixture exists.

        Raises:
            ServiceError: bad_response if the file is not a valid fixture
        """
        path = self.path_for(request)
        if not path.is_file():
            logger.debug(f"fixture miss service={self.service} key={path.stem}")
            return None
        try:
            with open(path, "r", encoding="utf-8") as f:
                stored = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ServiceError("bad_response", f"unreadable fixture {path.name}: {e}", self.service) from e
        if not isinstance(stored, dict) or "response" not in stored:
            raise ServiceError("bad_response", f"fixture {path.name} has no response", self.service)
        return stored["response"]

    def record(self, request: Mapping[str, Any], response: Any) -> Path:
        path = self.path_for(request)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(canonical_json({"request": request, "response": response}))
        return path


class JsonHttpService:
    """
    POSTs JSON to one endpoint and returns the decoded JSON object.

    429 maps to rate_limited, 5xx to unavailable, other non-2xx statuses and
    undecodable bodies to bad_response, httpx timeouts to timeout and other
    transport failures to unavailable. Retryable kinds are retried up to
    policy.retries times; nothing blocks past policy.timeout_s in total.
    """

    def __init__(self, service: str, endpoint: str,
                 token: Optional[str] = None,
                 policy: Optional[RetryPolicy] = None,
                 client: Optional[httpx.Client] = None,
                 sleep: Callable[[float], None] = time.sleep,
                 clock: Callable[[], float] = time.monotonic,
                 rng: Optional[random.Random] = None):
        self.service = service
        self.endpoint = endpoint
        self.token = token
        self.policy = policy or RetryPolicy()
        self.client = client or httpx.Client()
        self.sleep = sleep
        self.clock = clock
        self.rng = rng or random.Random()

    def _headers(self) -> Dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        return headers

    def _attempt(self, payload: Mapping[str, Any], remaining: float) -> Any:
        try:
            response = self.client.post(self.endpoint, json=payload, headers=self._headers(), timeout=remaining)
        except httpx.TimeoutException as e:
            raise ServiceError("timeout", str(e) or "request timed out", self.service) from e
        except httpx.TransportError as e:
            raise ServiceError("unavailable", str(e) or type(e).__name__, self.service) from e

        status = response.status_code
        if status == 429:
            raise ServiceError("rate_limited", "HTTP 429", self.service)
        if status >= 500:
            raise ServiceError("unavailable", f"HTTP {status}", self.service)
        if not 200 <= status < 300:
            raise ServiceError("bad_response", f"HTTP {status}", self.service)
        try:
            return response.json()
        except ValueError as e:
            raise ServiceError("bad_response", f"invalid JSON body: {e}", self.service) from e

    def call(self, payload: Mapping[str, Any]) -> Any:
        """
        Send one request with retries.

        Raises:
            ServiceError: the last failure once retries or time run out
        """
        deadline = self.clock() + self.policy.timeout_s
        last_error: Optional[ServiceError] = None
        for attempt in range(self.policy.retries + 1):
            remaining = deadline - self.clock()
            if remaining <= 0:
                break
            log_api_request(logger, self.service, self.endpoint, "POST", dict(payload), attempt + 1)
            try:
                return self._attempt(payload, remaining)
            except ServiceError as e:
                last_error = e
                if not e.retryable or attempt == self.policy.retries:
                    raise
            wait = min(self.policy.delay(attempt, self.rng), max(deadline - self.clock(), 0.0))
            logger.warning(
                f"retrying service={self.service} kind={last_error.kind} attempt={attempt + 1} wait_s={wait:.3f}"
            )
            self.sleep(wait)

        if last_error is None:
            last_error = ServiceError("timeout", f"no time left within {self.policy.timeout_s}s", self.service)
        raise last_error


class ServiceClient:
    """
    Base for the service contracts. A client answers either from a fixture
    store or from a live endpoint, never both.
    """

    service = ""

    def __init__(self, fixtures: Optional[FixtureStore] = None, http: Optional[JsonHttpService] = None,
                 params: Optional[Mapping[str, Any]] = None):
        if (fixtures is None) == (http is None):
            raise ValueError(f"{self.service} client needs exactly one of fixtures or http")
        self.fixtures = fixtures
        self.http = http
        self.params = dict(params or {})

    @property
    def mode(self) -> str:
        return "fixture" if self.fixtures is not None else "live"

    def _fetch(self, operation: str, request: Mapping[str, Any],
               params: Optional[Mapping[str, Any]] = None) -> Optional[Any]:
        """
        Fixture lookup (None on a miss) or a live call. Request parameters
        only travel with live calls; fixture keys depend on content alone.
        """
        log_service_call(logger, self.service, operation, dict(request), self.mode)
        if self.fixtures is not None:
            return self.fixtures.lookup(request)
        payload = {**self.params, **(params or {}), **request}
        return self.http.call(payload)

    def _bad(self, detail: str) -> ServiceError:
        return ServiceError("bad_response", detail, self.service)

    def _expect_dict(self, response: Any, *keys: str) -> Dict[str, Any]:
        if not isinstance(response, dict) or any(k not in response for k in keys):
            raise self._bad(f"response must be an object with {list(keys)}")
        return response
