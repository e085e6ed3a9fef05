"""Exception hierarchy shared across the pipeline.

Validation errors (bad inputs, bad config) derive from ValidationError and
map to CLI exit code 1; runtime failures derive from RuntimeFailure and map
to exit code 2.
"""

from __future__ import annotations


class DivaError(Exception):
    """Base class for all package errors."""


class ValidationError(DivaError):
    """Caller supplied invalid input or configuration."""


class RuntimeFailure(DivaError):
    """An operation failed at run time (transport, parsing, numerics)."""


# --- llm-gateway ---

class MissingBinding(ValidationError):
    def __init__(self, name: str):
        super().__init__(f"template placeholder {{{{{name}}}}} is unbound")
        self.name = name


class UnknownPlaceholder(ValidationError):
    def __init__(self, names):
        super().__init__(f"bindings name placeholders absent from template: {sorted(names)}")
        self.names = set(names)


class TemplateDrift(ValidationError):
    def __init__(self, template_id: str, expected: str, actual: str):
        super().__init__(
            f"template asset {template_id!r} checksum mismatch: "
            f"expected {expected}, got {actual}"
        )
        self.template_id = template_id


class Transport(RuntimeFailure):
    def __init__(self, url: str, cause: Exception | str):
        super().__init__(f"transport failure for {url}: {cause}")
        self.url = url
        self.cause = cause


class ScriptExhausted(RuntimeFailure):
    """Mock script has no remaining turn matching the request."""


class ProtocolError(RuntimeFailure):
    """Remote chat endpoint returned a malformed response."""


# --- retrieval-tools ---

class SourceDisabled(ValidationError):
    def __init__(self, source: str):
        super().__init__(f"search source {source!r} is not enabled")
        self.source = source


class ProviderError(RuntimeFailure):
    def __init__(self, status: int, detail: str = ""):
        super().__init__(f"web provider returned HTTP {status}: {detail}".rstrip(": "))
        self.status = status


class QuotaExceeded(ProviderError):
    pass


class EmptyCorpus(ValidationError):
    pass


class DuplicateDocId(ValidationError):
    def __init__(self, doc_id: str):
        super().__init__(f"duplicate document id {doc_id!r}")
        self.doc_id = doc_id


# --- agent / compressor ---

class BackendError(RuntimeFailure):
    """Unrecoverable LLM backend failure inside a pipeline stage."""


class FormatError(RuntimeFailure):
    def __init__(self, message: str, raw_reply: str = ""):
        super().__init__(message)
        self.raw_reply = raw_reply


class OverflowUnavoidable(ValidationError):
    """Question plus answer alone exceed the scorer input length budget."""


# --- disc-scorer ---

class DimensionMismatch(ValidationError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"feature dimension {got} does not match head dimension {expected}")
        self.expected = expected
        self.got = got


class EmptyDataset(ValidationError):
    pass


class NonFiniteLoss(RuntimeFailure):
    def __init__(self, epoch: int, batch: int):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class EmbeddingProviderError(RuntimeFailure):
    pass


# --- data-pipelines ---

class NoValidPair(ValidationError):
    """All answers of a question share one label; no pair can be sampled."""


class SkippedQuestion(DivaError):
    def __init__(self, question_id: str, reason: str):
        super().__init__(f"question {question_id!r} skipped: {reason}")
        self.question_id = question_id
        self.reason = reason


class ReviewSchemaError(ValidationError):
    pass


# --- evalbench ---

class VerdictParseError(RuntimeFailure):
    def __init__(self, message: str, raw_reply: str = ""):
        super().__init__(message)
        self.raw_reply = raw_reply


class NotAPermutation(ValidationError):
    pass


class MissingLabels(ValidationError):
    pass


class DecompositionEmpty(RuntimeFailure):
    def __init__(self, response_id: str):
        super().__init__(f"response {response_id!r} decomposed into zero claims")
        self.response_id = response_id


# --- cli ---

class ConfigError(ValidationError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))
