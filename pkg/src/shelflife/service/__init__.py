from .store import (
    AnnotationStore,
    EventLog,
    ServiceConfig,
    Task,
    load_corpus,
    load_roster,
    recover_log,
)
from .app import create_app

__all__ = [
    "AnnotationStore",
    "EventLog",
    "ServiceConfig",
    "Task",
    "create_app",
    "load_corpus",
    "load_roster",
    "recover_log",
]
