"""Round- and message-efficient MST built on covers and fragment routing."""
from .algorithm import fragments_at, run_opt_mst
from .config import AlgoConfig, Windows

__all__ = ["AlgoConfig", "Windows", "fragments_at", "run_opt_mst"]
