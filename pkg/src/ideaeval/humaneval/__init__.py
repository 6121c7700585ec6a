"""Human rating workflow: session planning, durable rating log, HTTP service."""
from .sessions import (
    DEFAULT_OVERLAP_FRACTION,
    ImportResult,
    Session,
    SessionManager,
    SessionPlan,
    blind_key,
    create_sessions,
    import_ratings_csv,
    load_assignments,
)
from .service import build_app, serve
from .store import Rating, RatingStore

__all__ = [
    "DEFAULT_OVERLAP_FRACTION",
    "ImportResult",
    "Rating",
    "RatingStore",
    "build_app",
    "serve",
    "Session",
    "SessionManager",
    "SessionPlan",
    "blind_key",
    "create_sessions",
    "import_ratings_csv",
    "load_assignments",
]
