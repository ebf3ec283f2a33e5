"""Multi-user service: per-user pipelines, event log, HTTP JSON API."""

from .core import (
    CompanionService,
    Envelope,
    EnvelopeKind,
    Forbidden,
    PipelineTimeout,
    QueueFull,
    ServiceConfig,
    ServiceError,
    UnknownUser,
)
from .eventlog import EventLog

__all__ = [
    "CompanionService",
    "Envelope",
    "EnvelopeKind",
    "Forbidden",
    "PipelineTimeout",
    "QueueFull",
    "ServiceConfig",
    "ServiceError",
    "UnknownUser",
    "EventLog",
]
