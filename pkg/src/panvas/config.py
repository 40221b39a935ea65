"""Service configuration: one TOML file binds the whole deployment.

A config is rejected wholesale when any field is invalid — there is no
partial application. The PANVAS_CONFIG environment variable overrides the
config path for the service CLI.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:          # Python 3.10
    import tomli as tomllib

from . import errors
from .errors import PanvasError
from .ledger import AchievementRule, LedgerPolicy

ENV_CONFIG = "PANVAS_CONFIG"

DEFAULT_ACHIEVEMENTS = [
    AchievementRule("first-fragment", "FRAGMENT_PUBLISHED", 1, 3, "first fragment published"),
    AchievementRule("first-review", "REVIEW_SUBMITTED", 1, 5, "first review delivered"),
    AchievementRule("ten-ratings", "RATING_CAST", 10, 10, "ten papers rated"),
]


@dataclass
class ServiceConfig:
    ledger: LedgerPolicy = field(default_factory=lambda: LedgerPolicy(achievements=list(DEFAULT_ACHIEVEMENTS)))
    server_key: str = "panvas-dev-key"
    license_pass_threshold: int = 70
    reputation_alpha: float = 0.2
    reputation_prior: float = 0.5
    max_fragment_bytes: int = 10 * 1024 * 1024
    min_review_chars: int = 500
    deadline_grace: int = 10
    match_weight_expertise: float = 0.6
    match_weight_reputation: float = 0.3
    match_weight_price: float = 0.1
    market_fee_bps: int = 200
    emoji_set: tuple[str, ...] = ("👍", "👎", "🎉", "🤔", "❤️")
    visibility_weights: tuple[float, float, float] = (1.0, 0.5, 0.25)
    moderation_warn_threshold: float = 3.0
    moderation_hide_threshold: float = 6.0
    lexicon_path: str = ""
    banned_terms: list[str] = field(default_factory=list)
    listen_host: str = "127.0.0.1"
    listen_port: int = 8787
    data_dir: str = "./panvas-data"
    clock_mode: str = "logical"   # "logical" (tick-driven) or "wall"

    def __post_init__(self):
        problems = []
        if not self.server_key:
            problems.append("server_key must be non-empty")
        if not 0 <= self.license_pass_threshold <= 100:
            problems.append("license_pass_threshold must be 0-100")
        if not 0.0 < self.reputation_alpha <= 1.0:
            problems.append("reputation_alpha must be in (0, 1]")
        if not 0.0 <= self.reputation_prior <= 1.0:
            problems.append("reputation_prior must be in [0, 1]")
        if self.max_fragment_bytes <= 0:
            problems.append("max_fragment_bytes must be positive")
        if self.min_review_chars < 1:
            problems.append("min_review_chars must be >= 1")
        if self.deadline_grace < 0:
            problems.append("deadline_grace must be >= 0")
        for name in ("match_weight_expertise", "match_weight_reputation", "match_weight_price"):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be >= 0")
        if not 0 <= self.market_fee_bps <= 10000:
            problems.append("market_fee_bps must be 0-10000")
        if not self.emoji_set:
            problems.append("emoji_set must be non-empty")
        if len(self.visibility_weights) != 3 or any(w < 0 for w in self.visibility_weights):
            problems.append("visibility_weights must be three non-negative numbers")
        if not 0 <= self.moderation_warn_threshold <= self.moderation_hide_threshold:
            problems.append("moderation thresholds must satisfy 0 <= warn <= hide")
        if self.clock_mode not in ("logical", "wall"):
            problems.append("clock_mode must be 'logical' or 'wall'")
        if self.listen_port < 1 or self.listen_port > 65535:
            problems.append("listen_port must be 1-65535")
        if problems:
            raise PanvasError(errors.VALIDATION, "invalid config: " + "; ".join(problems))


def _ledger_policy(table: dict) -> LedgerPolicy:
    achievements = [
        AchievementRule(
            str(rule["id"]), str(rule["event"]), int(rule.get("count", 1)),
            int(rule["reward"]), str(rule.get("description", "")),
        )
        for rule in table.get("achievements", [])
    ]
    if "achievements" not in table:
        achievements = list(DEFAULT_ACHIEVEMENTS)
    defaults = LedgerPolicy()
    return LedgerPolicy(
        genesis_treasury=int(table.get("genesis_treasury", defaults.genesis_treasury)),
        base_reward=int(table.get("base_reward", defaults.base_reward)),
        activity_gate=int(table.get("activity_gate", defaults.activity_gate)),
        vip_price=int(table.get("vip_price", defaults.vip_price)),
        production_weights={str(k): int(v) for k, v in table.get("production_weights", defaults.production_weights).items()},
        consumption_weights={str(k): int(v) for k, v in table.get("consumption_weights", defaults.consumption_weights).items()},
        achievements=achievements,
    )


def load_config(path: Optional[str] = None) -> ServiceConfig:
    """Load and validate a TOML config; defaults apply when path is None."""
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if path is None:
        return ServiceConfig()
    raw = Path(path).read_bytes()
    try:
        data = tomllib.loads(raw.decode())
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise PanvasError(errors.VALIDATION, f"unparseable config {path}: {exc}")

    kwargs: dict = {}
    if "ledger" in data:
        kwargs["ledger"] = _ledger_policy(data["ledger"])
    identity = data.get("identity", {})
    if "server_key" in identity:
        kwargs["server_key"] = str(identity["server_key"])
    if "license_pass_threshold" in identity:
        kwargs["license_pass_threshold"] = int(identity["license_pass_threshold"])
    if "reputation_alpha" in identity:
        kwargs["reputation_alpha"] = float(identity["reputation_alpha"])
    if "reputation_prior" in identity:
        kwargs["reputation_prior"] = float(identity["reputation_prior"])
    papers = data.get("papers", {})
    if "max_fragment_bytes" in papers:
        kwargs["max_fragment_bytes"] = int(papers["max_fragment_bytes"])
    reviews = data.get("reviews", {})
    if "min_review_chars" in reviews:
        kwargs["min_review_chars"] = int(reviews["min_review_chars"])
    if "deadline_grace" in reviews:
        kwargs["deadline_grace"] = int(reviews["deadline_grace"])
    weights = reviews.get("match_weights", {})
    if "expertise" in weights:
        kwargs["match_weight_expertise"] = float(weights["expertise"])
    if "reputation" in weights:
        kwargs["match_weight_reputation"] = float(weights["reputation"])
    if "price" in weights:
        kwargs["match_weight_price"] = float(weights["price"])
    markets = data.get("markets", {})
    if "fee_bps" in markets:
        kwargs["market_fee_bps"] = int(markets["fee_bps"])
    engagement = data.get("engagement", {})
    if "emoji" in engagement:
        kwargs["emoji_set"] = tuple(str(e) for e in engagement["emoji"])
    if "visibility_weights" in engagement:
        vw = engagement["visibility_weights"]
        kwargs["visibility_weights"] = (float(vw["rating"]), float(vw["reviews"]), float(vw["commenters"]))
    moderation = data.get("moderation", {})
    if "warn_threshold" in moderation:
        kwargs["moderation_warn_threshold"] = float(moderation["warn_threshold"])
    if "hide_threshold" in moderation:
        kwargs["moderation_hide_threshold"] = float(moderation["hide_threshold"])
    if "lexicon_path" in moderation:
        kwargs["lexicon_path"] = str(moderation["lexicon_path"])
    service = data.get("service", {})
    if "listen" in service:
        host, _, port = str(service["listen"]).rpartition(":")
        kwargs["listen_host"] = host or "127.0.0.1"
        try:
            kwargs["listen_port"] = int(port)
        except ValueError:
            raise PanvasError(errors.VALIDATION, f"bad listen address {service['listen']}")
    if "data_dir" in service:
        kwargs["data_dir"] = str(service["data_dir"])
    if "clock" in service:
        kwargs["clock_mode"] = str(service["clock"])

    config = ServiceConfig(**kwargs)
    if config.lexicon_path:
        lexicon_file = Path(config.lexicon_path)
        if not lexicon_file.is_absolute():
            lexicon_file = Path(path).parent / lexicon_file
        try:
            lines = lexicon_file.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise PanvasError(errors.VALIDATION, f"cannot read lexicon: {exc}")
        config.banned_terms = [line.strip() for line in lines if line.strip()]
    return config
