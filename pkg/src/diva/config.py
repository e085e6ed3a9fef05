"""Run configuration: INI file with one section per pipeline area.

Precedence is defaults < file < command-line overrides. Validation is
eager and complete: every problem in the file is reported in one
ConfigError before anything network-facing runs. Secrets never live in
the file; they come from LLM_API_KEY / SEARCH_API_KEY.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .agent import DEFAULT_SENTINELS, AgentConfig
from .errors import ConfigError, ValidationError
from .gateway import LlmBackend, MockScript
from .retrieval import RetrievalConfig, WebClient
from .scorer import HASHED_DIM, Featurizer, TrainConfig

BACKEND_STAGES = ("search", "compress", "verify", "judge", "generator")

# section -> {key: default-as-string}
_SCHEMA: dict[str, dict[str, str]] = {
    "backends": {
        **{stage: "mock" for stage in BACKEND_STAGES},
        **{f"{stage}_script": "" for stage in BACKEND_STAGES},
        **{f"{stage}_endpoint": "" for stage in BACKEND_STAGES},
        **{f"{stage}_model": "" for stage in BACKEND_STAGES},
        "scorer_endpoint": "",
        "template_dir": "",
        "max_retries": "2",
        "timeout": "30.0",
    },
    "retrieval": {
        "k_web": "10",
        "k_local": "3",
        "sources": "web,local",
        "corpus": "",
        "web_fixtures": "",
        "web_mode": "replay",
    },
    "agent": {
        "max_turns": "6",
        "sentinels": ",".join(DEFAULT_SENTINELS),
    },
    "train": {
        "margin": "0.1",
        "learning_rate": "2e-4",
        "schedule": "cosine_decay",
        "epochs": "3",
        "batch_size": "32",
        "optimizer": "adam_w",
        "weight_decay": "0.0",
        "architecture": "linear",
        "hidden": "32",
        "feature_dim": str(HASHED_DIM),
        "max_length": "1024",
    },
    "run": {
        "seed": "0",
        "parallelism": "1",
    },
}


@dataclass(frozen=True)
class BackendSpec:
    kind: str  # mock | remote | none
    script_path: str = ""
    endpoint: str = ""
    model: str = ""


@dataclass
class RunConfig:
    backends: dict[str, BackendSpec]
    scorer_endpoint: str
    template_dir: str
    max_retries: int
    timeout: float
    retrieval: RetrievalConfig
    corpus_path: str
    web_fixtures: str
    web_mode: str
    agent: AgentConfig
    train: TrainConfig
    architecture: str
    hidden: int
    feature_dim: int
    seed: int
    parallelism: int
    base_dir: Path = field(default_factory=Path)

    def resolve(self, path: str) -> Path:
        """Paths in the config file are relative to the file's directory."""
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def featurizer(self) -> Featurizer:
        return Featurizer(kind="hashed_text", dim=self.feature_dim)

    def web_client(self) -> WebClient | None:
        if "web" not in self.retrieval.enabled_sources:
            return None
        if self.web_mode == "replay" and not self.web_fixtures:
            return None
        fixtures = str(self.resolve(self.web_fixtures)) if self.web_fixtures else None
        return WebClient(mode=self.web_mode, fixtures_path=fixtures, timeout=self.timeout)

    def make_backend(self, stage: str) -> LlmBackend | None:
        """Build a backend for one stage; mock stages get a fresh script."""
        spec = self.backends[stage]
        if spec.kind == "none":
            return None
        if spec.kind == "mock":
            turns = _load_script(self.resolve(spec.script_path))
            return LlmBackend(kind="mock", script=MockScript(turns))
        return LlmBackend(
            kind="remote",
            endpoint=spec.endpoint,
            model_name=spec.model or "default",
            timeout=self.timeout,
            max_retries=self.max_retries,
        )

    def config_echo(self) -> dict[str, Any]:
        """Non-secret summary embedded in manifests and reports."""
        return {
            "sources": "+".join(sorted(self.retrieval.enabled_sources)),
            "enabled_sources": sorted(self.retrieval.enabled_sources),
            "k_web": self.retrieval.k_web,
            "k_local": self.retrieval.k_local,
            "max_turns": self.agent.max_turns,
            "margin": self.train.margin,
            "epochs": self.train.epochs,
            "max_length": self.train.max_len,
            "architecture": self.architecture,
            "feature_dim": self.feature_dim,
            "seed": self.seed,
            "parallelism": self.parallelism,
            "web_mode": self.web_mode,
            "binary_f1_protocol": "pairwise-majority induced labels",
        }


def _load_script(path: Path) -> list[tuple[str, str]]:
    if not path.is_file():
        raise ValidationError(f"mock script file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    turns = obj.get("turns")
    if not isinstance(turns, list) or any(len(t) != 2 for t in turns):
        raise ValidationError(f"mock script {path} must contain turns: [[matcher, reply], ...]")
    return [(str(m), str(r)) for m, r in turns]


def _merge(
    file_values: Mapping[str, Mapping[str, str]],
    overrides: Mapping[str, str],
    problems: list[str],
) -> dict[str, dict[str, str]]:
    merged = {section: dict(defaults) for section, defaults in _SCHEMA.items()}
    for section, values in file_values.items():
        if section not in _SCHEMA:
            problems.append(f"unknown config section [{section}]")
            continue
        for key, value in values.items():
            if key not in _SCHEMA[section]:
                problems.append(f"unknown key {key!r} in section [{section}]")
            else:
                merged[section][key] = value
    for dotted, value in overrides.items():
        if "." not in dotted:
            problems.append(f"override {dotted!r} must look like section.key")
            continue
        section, key = dotted.split(".", 1)
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            problems.append(f"unknown override {dotted!r}")
        else:
            merged[section][key] = value
    return merged


def _parse_typed(merged: dict[str, dict[str, str]], problems: list[str]) -> dict[str, Any]:
    typed: dict[str, Any] = {}

    def grab(section: str, key: str, parse, check=None, reason: str = ""):
        raw = merged[section][key]
        try:
            value = parse(raw)
        except (ValueError, TypeError):
            problems.append(f"{section}.{key}: cannot parse {raw!r}")
            return None
        if check is not None and not check(value):
            problems.append(f"{section}.{key}: {reason} (got {raw!r})")
            return None
        typed[f"{section}.{key}"] = value
        return value

    grab("retrieval", "k_web", int, lambda v: v >= 1, "must be >= 1")
    grab("retrieval", "k_local", int, lambda v: v >= 1, "must be >= 1")
    sources = frozenset(
        s.strip() for s in merged["retrieval"]["sources"].split(",") if s.strip()
    )
    if not sources or not sources <= {"web", "local"}:
        problems.append(f"retrieval.sources: must be a subset of web,local (got {merged['retrieval']['sources']!r})")
    typed["retrieval.sources"] = sources
    if merged["retrieval"]["web_mode"] not in ("replay", "live", "record"):
        problems.append("retrieval.web_mode: must be replay, live, or record")
    typed["retrieval.web_mode"] = merged["retrieval"]["web_mode"]

    grab("agent", "max_turns", int, lambda v: v >= 1, "must be >= 1")
    sentinels = tuple(s.strip() for s in merged["agent"]["sentinels"].split(",") if s.strip())
    if not sentinels:
        problems.append("agent.sentinels: must list at least one token")
    typed["agent.sentinels"] = sentinels

    grab("train", "margin", float, lambda v: v > 0, "must be > 0")
    grab("train", "learning_rate", float, lambda v: v > 0, "must be > 0")
    grab("train", "epochs", int, lambda v: v >= 1, "must be >= 1")
    grab("train", "batch_size", int, lambda v: v >= 1, "must be >= 1")
    grab("train", "weight_decay", float, lambda v: v >= 0, "must be >= 0")
    grab("train", "hidden", int, lambda v: v >= 1, "must be >= 1")
    grab("train", "feature_dim", int, lambda v: v >= 2, "must be >= 2")
    grab("train", "max_length", int, lambda v: v >= 8, "must be >= 8")
    if merged["train"]["schedule"] not in ("constant", "cosine_decay"):
        problems.append("train.schedule: must be constant or cosine_decay")
    if merged["train"]["optimizer"] not in ("sgd", "adam_w"):
        problems.append("train.optimizer: must be sgd or adam_w")
    if merged["train"]["architecture"] not in ("linear", "mlp1"):
        problems.append("train.architecture: must be linear or mlp1")

    grab("run", "seed", int)
    grab("run", "parallelism", int, lambda v: v >= 1, "must be >= 1")
    grab("backends", "max_retries", int, lambda v: v >= 0, "must be >= 0")
    grab("backends", "timeout", float, lambda v: v > 0, "must be > 0")

    for stage in BACKEND_STAGES:
        kind = merged["backends"][stage]
        if kind not in ("mock", "remote", "none"):
            problems.append(f"backends.{stage}: must be mock, remote, or none")
            continue
        if kind == "remote" and not merged["backends"][f"{stage}_endpoint"]:
            problems.append(f"backends.{stage}_endpoint: required for remote backend")
    return typed


def load_config(
    path: str | Path | None = None, overrides: Mapping[str, str] | None = None
) -> RunConfig:
    """Read, merge, and validate; collects every problem before raising."""
    problems: list[str] = []
    file_values: dict[str, dict[str, str]] = {}
    base_dir = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError([f"config file not found: {path}"])
        parser = configparser.ConfigParser()
        parser.optionxform = str  # keep key case as written
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError([f"cannot parse {path}: {exc}"]) from exc
        file_values = {section: dict(parser[section]) for section in parser.sections()}
        base_dir = path.resolve().parent

    merged = _merge(file_values, overrides or {}, problems)
    typed = _parse_typed(merged, problems)
    if problems:
        raise ConfigError(problems)

    retrieval = RetrievalConfig(
        k_web=typed["retrieval.k_web"],
        k_local=typed["retrieval.k_local"],
        enabled_sources=typed["retrieval.sources"],
    )
    agent = AgentConfig(
        max_turns=typed["agent.max_turns"],
        sentinels=typed["agent.sentinels"],
        retrieval=retrieval,
    )
    train = TrainConfig(
        margin=typed["train.margin"],
        learning_rate=typed["train.learning_rate"],
        schedule=merged["train"]["schedule"],
        epochs=typed["train.epochs"],
        batch_size=typed["train.batch_size"],
        seed=typed["run.seed"],
        optimizer=merged["train"]["optimizer"],
        weight_decay=typed["train.weight_decay"],
        max_len=typed["train.max_length"],
    )
    backends = {
        stage: BackendSpec(
            kind=merged["backends"][stage],
            script_path=merged["backends"][f"{stage}_script"],
            endpoint=merged["backends"][f"{stage}_endpoint"],
            model=merged["backends"][f"{stage}_model"],
        )
        for stage in BACKEND_STAGES
    }
    return RunConfig(
        backends=backends,
        scorer_endpoint=merged["backends"]["scorer_endpoint"],
        template_dir=merged["backends"]["template_dir"],
        max_retries=typed["backends.max_retries"],
        timeout=typed["backends.timeout"],
        retrieval=retrieval,
        corpus_path=merged["retrieval"]["corpus"],
        web_fixtures=merged["retrieval"]["web_fixtures"],
        web_mode=typed["retrieval.web_mode"],
        agent=agent,
        train=train,
        architecture=merged["train"]["architecture"],
        hidden=typed["train.hidden"],
        feature_dim=typed["train.feature_dim"],
        seed=typed["run.seed"],
        parallelism=typed["run.parallelism"],
        base_dir=base_dir,
    )
