"""
Process-level settings for the experiment lab
"""
import os
from pathlib import Path
from typing import Optional
from dotenv import load_dotenv

load_dotenv()


class LabSettings:
    """Settings shared by every command, loaded from the environment"""

    def __init__(
        self,
        threads: Optional[int] = None,
        output_dir: Optional[str] = None,
        log_level: Optional[str] = None,
        quadrature_nodes: Optional[int] = None
    ):
        self.threads = threads or int(os.getenv("OCSM_LAB_THREADS", "1"))
        self.output_dir = Path(output_dir or os.getenv("OCSM_LAB_OUT", "results"))
        self.log_level = (log_level or os.getenv("OCSM_LAB_LOG_LEVEL", "INFO")).upper()
        self.quadrature_nodes = quadrature_nodes or int(os.getenv("OCSM_LAB_QUAD_NODES", "64"))

        if self.threads < 1:
            raise ValueError(f"threads must be at least 1, got {self.threads}")
        if self.quadrature_nodes < 16:
            raise ValueError(f"quadrature_nodes must be at least 16, got {self.quadrature_nodes}")

    @property
    def as_dict(self) -> dict:
        """Get settings as a dictionary (for run summaries)"""
        return {
            "threads": self.threads,
            "output_dir": str(self.output_dir),
            "log_level": self.log_level,
            "quadrature_nodes": self.quadrature_nodes
        }


# Singleton instance for convenience
_default_settings: Optional[LabSettings] = None


def get_settings() -> LabSettings:
    """
    Get or create the process-wide settings instance.

    Returns:
        LabSettings instance
    """
    global _default_settings

    if _default_settings is None:
        _default_settings = LabSettings()

    return _default_settings
