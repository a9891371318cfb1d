"""Python bindings for the resus resuscitation protocol engine."""

from ._resus import (
    ConfigError,
    EventLog,
    IntegrityError,
    IoError,
    ParseError,
    Session,
    VerificationError,
    countdown_signals,
    load_session,
    parse_session,
    render_documentation,
    render_notes,
    replay_verify,
    run_scenario,
    save_session,
    serialize_session,
    summarize,
)

__all__ = [
    "ConfigError",
    "EventLog",
    "IntegrityError",
    "IoError",
    "ParseError",
    "Session",
    "VerificationError",
    "countdown_signals",
    "load_session",
    "parse_session",
    "render_documentation",
    "render_notes",
    "replay_verify",
    "run_scenario",
    "save_session",
    "serialize_session",
    "summarize",
]
