"""Provider-agnostic LLM client: templating, caching, and the two pipeline steps.

A Provider is anything with a send(CompletionRequest) -> str method.  The
HTTP provider speaks the common chat-completion JSON shape; the mock
provider replays scripted transcripts for tests and offline runs.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import time
from dataclasses import dataclass, replace
from pathlib import Path

from editgloss.atomic import (
    AtomicEdit,
    FeasibilityResult,
    ParseError,
    apply_edits,
    parse_edit_lines,
    postprocess,
    serialize_edits,
)
from editgloss.diffs import coarse_edits
from editgloss.tokenization import tokenize

log = logging.getLogger(__name__)

ASSET_DIR = Path(__file__).parent / "assets"

TEMPLATE_ASSETS = {
    ("extract", "de"): "de_extract.txt",
    ("extract", "zh"): "zh_extract.txt",
    ("explain", "de"): "de_explain.txt",
    ("explain", "zh"): "zh_explain.txt",
    ("baseline_oneshot", "de"): "de_oneshot.txt",
}

STEPS = ("extract", "explain", "baseline_oneshot")

# defaults mirroring the two pipeline steps: deterministic extraction,
# sampled explanation
EXTRACT_TEMPERATURE = 0.0
EXPLAIN_TEMPERATURE = 1.0
EXPLAIN_TOP_P = 1.0


class ConfigError(ValueError):
    pass


class ProviderError(RuntimeError):
    def __init__(self, message, status=None, auth=False):
        super().__init__(message)
        self.status = status
        self.auth = auth


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str
    language: str
    step: str

    def required_placeholders(self):
        required = ["{src}", "{trg}"]
        if self.step in ("extract", "explain"):
            required.append("{edits}")
        return required

    def validate(self):
        if self.step not in STEPS:
            raise ConfigError("unknown template step %r" % (self.step,))
        for ph in self.required_placeholders():
            if ph not in self.body:
                raise ConfigError(
                    "template %s is missing placeholder %s" % (self.name, ph))
        return self


def load_template(step, language, path=None):
    """Load a prompt template from its bundled asset or an override file."""
    if path is None:
        try:
            fname = TEMPLATE_ASSETS[(step, language)]
        except KeyError:
            raise ConfigError(
                "no bundled template for step=%s language=%s" % (step, language))
        path = ASSET_DIR / fname
    body = Path(path).read_text(encoding="utf-8")
    name = Path(path).stem
    return PromptTemplate(name, body, language, step).validate()


@dataclass(frozen=True)
class CompletionRequest:
    model_id: str
    temperature: float
    top_p: float
    prompt: str
    max_tokens: int | None = None

    def validate(self):
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ConfigError("top_p must be in (0, 1]")
        return self


@dataclass(frozen=True)
class Explanation:
    edit_desc: str
    reason: str
    error_type: str
    raw: str
    matched_edit: AtomicEdit | None = None


def _format_edits(edits):
    lines = []
    for e in edits:
        if hasattr(e, "as_tuple_text"):  # CoarseEdit
            lines.append(e.as_tuple_text())
        else:
            lines.append(serialize_edits([e]))
    return "\n".join(lines)


def render_prompt(template, src, trg, edits=None):
    """Fill template placeholders with byte-exact substitution."""
    body = template.body
    if "{edits}" in body:
        if edits is None:
            raise ConfigError(
                "template %s requires the {edits} placeholder input" % template.name)
        body = body.replace("{edits}", _format_edits(edits))
    if src is None:
        raise ConfigError("template %s requires the {src} placeholder input" % template.name)
    if trg is None:
        raise ConfigError("template %s requires the {trg} placeholder input" % template.name)
    return body.replace("{src}", src).replace("{trg}", trg)


# ---------------------------------------------------------------------------
# Providers
# ---------------------------------------------------------------------------

class MockProvider:
    """Replays a scripted transcript of replies and failures.

    Each transcript entry is either a reply string or a (status, message)
    tuple standing for an HTTP failure.
    """

    def __init__(self, transcript):
        self.transcript = list(transcript)
        self.calls = 0
        self.prompts = []

    def send(self, request):
        self.calls += 1
        self.prompts.append(request.prompt)
        if not self.transcript:
            raise ProviderError("mock transcript exhausted", status=500)
        item = self.transcript.pop(0)
        if isinstance(item, tuple):
            status, message = item
            raise ProviderError(message, status=status, auth=status in (401, 403))
        return item


class HTTPProvider:
    """Chat-completion provider over HTTP with a bearer credential.

    The credential is read from the environment variable named in the
    configuration; it never appears in config files or logs.
    """

    def __init__(self, endpoint, credential_env, timeout=60.0):
        self.endpoint = endpoint
        self.credential_env = credential_env
        self.timeout = timeout

    def send(self, request):
        import requests

        token = os.environ.get(self.credential_env)
        if not token:
            raise ConfigError(
                "credential environment variable %s is not set" % self.credential_env)
        body = {
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "top_p": request.top_p,
        }
        if request.max_tokens is not None:
            body["max_tokens"] = request.max_tokens
        try:
            resp = requests.post(
                self.endpoint,
                json=body,
                headers={"Authorization": "Bearer " + token},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise ProviderError("request failed: %s" % exc) from exc
        if resp.status_code != 200:
            raise ProviderError(
                "provider returned status %d" % resp.status_code,
                status=resp.status_code,
                auth=resp.status_code in (401, 403),
            )
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise ProviderError("malformed provider response: %s" % exc) from exc


def complete(request, provider, max_attempts=5, base_delay=1.0):
    """Send a completion request, retrying transient failures with backoff."""
    request.validate()
    last = None
    for attempt in range(max_attempts):
        try:
            return provider.send(request)
        except ProviderError as exc:
            if exc.auth:
                raise
            last = exc
            if attempt + 1 < max_attempts:
                time.sleep(base_delay * (2 ** attempt))
    raise ProviderError(
        "exhausted %d attempts; last error: %s" % (max_attempts, last),
        status=getattr(last, "status", None),
    )


def request_digest(request):
    payload = json.dumps(
        [request.model_id, request.temperature, request.top_p, request.prompt],
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def cached_complete(request, provider, cache_dir, max_attempts=5, base_delay=1.0):
    """complete() with a content-addressed on-disk response cache.

    Returns (text, digest, cache_hit).
    """
    digest = request_digest(request)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / (digest + ".json")
    if path.exists():
        try:
            rec = json.loads(path.read_text(encoding="utf-8"))
            return rec["reply"], digest, True
        except (ValueError, KeyError) as exc:
            log.warning("corrupt cache entry %s treated as miss: %s", path, exc)
    reply = complete(request, provider, max_attempts=max_attempts, base_delay=base_delay)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(
        json.dumps({"model_id": request.model_id, "reply": reply}, ensure_ascii=False),
        encoding="utf-8",
    )
    tmp.replace(path)
    return reply, digest, False


def log_call(log_path, pair_id, step, digest, duration_ms):
    """Append one run-log record; no-op when log_path is None."""
    if log_path is None:
        return
    with open(log_path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps({
            "pair_id": pair_id,
            "step": step,
            "digest": digest,
            "duration_ms": round(duration_ms, 3),
        }) + "\n")


# ---------------------------------------------------------------------------
# Pipeline steps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtractionResult:
    edits: tuple
    warnings: tuple
    feasibility: FeasibilityResult


def extract_edits_llm(pair, template, provider, model_id, cache_dir=None,
                      lexicon=None, temperature=EXTRACT_TEMPERATURE,
                      log_path=None, max_attempts=5, base_delay=1.0):
    """LLM edit extraction: coarse diff in, parsed atomic edits out."""
    src = tokenize(pair.source, pair.lang, lexicon=lexicon)
    tgt = tokenize(pair.target, pair.lang, lexicon=lexicon)
    coarse = coarse_edits(src, tgt)
    if not coarse:
        return ExtractionResult((), (), FeasibilityResult("feasible", pair.target))
    prompt = render_prompt(template, src=pair.source, trg=pair.target, edits=coarse)
    request = CompletionRequest(model_id, temperature, 1.0, prompt).validate()
    started = time.monotonic()
    if cache_dir is not None:
        reply, digest, _ = cached_complete(
            request, provider, cache_dir, max_attempts=max_attempts, base_delay=base_delay)
    else:
        reply = complete(request, provider, max_attempts=max_attempts, base_delay=base_delay)
        digest = request_digest(request)
    log_call(log_path, pair.id, "extract", digest, (time.monotonic() - started) * 1000)
    try:
        edits, warnings = parse_edit_lines(reply)
    except ParseError:
        raise ParseError("pair %s: unparseable extraction reply" % pair.id, raw=reply)
    edits = postprocess(edits)
    feas = apply_edits(src, pair.target, edits)
    return ExtractionResult(tuple(edits), tuple(warnings), feas)


def explain_edits(pair, edits, template, provider, model_id, cache_dir=None,
                  temperature=EXPLAIN_TEMPERATURE, top_p=EXPLAIN_TOP_P,
                  log_path=None, max_attempts=5, base_delay=1.0):
    """Generate explanations for all edits of one pair in a single call."""
    if not edits:
        return []
    prompt = render_prompt(template, src=pair.source, trg=pair.target, edits=edits)
    request = CompletionRequest(model_id, temperature, top_p, prompt).validate()
    started = time.monotonic()
    if cache_dir is not None:
        reply, digest, _ = cached_complete(
            request, provider, cache_dir, max_attempts=max_attempts, base_delay=base_delay)
    else:
        reply = complete(request, provider, max_attempts=max_attempts, base_delay=base_delay)
        digest = request_digest(request)
    log_call(log_path, pair.id, "explain", digest, (time.monotonic() - started) * 1000)
    explanations = parse_explanations(reply)
    if not explanations:
        raise ParseError("pair %s: unparseable explanation reply" % pair.id, raw=reply)
    from editgloss.evaluation import coverage  # lazy: eval imports llm types

    report = coverage(list(edits), explanations, pair)
    by_id = {id(x): e for e, x in report.matched}
    return [replace(x, matched_edit=by_id.get(id(x))) for x in explanations]


_TYPE_LINE = re.compile(r"^\s*\**\s*Error type\s*\**\s*[:：]\s*(.*?)\s*$", re.IGNORECASE)


def parse_explanations(text):
    """Split a reply into (explanation sentence, error type) blocks."""
    out = []
    buf = []

    def flush(error_type):
        raw = "\n".join(buf).strip()
        del buf[:]
        if not raw and not error_type:
            return
        sentence = " ".join(raw.split())
        if " because " in sentence:
            desc, reason = sentence.split(" because ", 1)
        else:
            desc, reason = sentence, ""
        out.append(Explanation(desc.strip(), reason.strip(), error_type,
                               raw or ("Error type: " + error_type)))

    for line in text.splitlines():
        m = _TYPE_LINE.match(line)
        if m:
            flush(m.group(1).strip())
        elif line.strip():
            if line.strip().lower() == "explanation:":
                continue
            buf.append(line)
    if any(ln.strip() for ln in buf):
        flush("")
    return out


__all__ = [
    "ASSET_DIR",
    "CompletionRequest",
    "ConfigError",
    "EXPLAIN_TEMPERATURE",
    "EXPLAIN_TOP_P",
    "EXTRACT_TEMPERATURE",
    "Explanation",
    "ExtractionResult",
    "HTTPProvider",
    "MockProvider",
    "PromptTemplate",
    "ProviderError",
    "cached_complete",
    "complete",
    "explain_edits",
    "extract_edits_llm",
    "load_template",
    "log_call",
    "parse_explanations",
    "render_prompt",
    "request_digest",
]
