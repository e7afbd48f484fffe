"""Configuration loading, run orchestration and persistence."""

from .config import RunConfig
from .main import main
from .runio import ManifestWriter, read_array, read_manifest, sha256_file, write_array, write_csv

__all__ = [
    "ManifestWriter",
    "RunConfig",
    "main",
    "read_array",
    "read_manifest",
    "sha256_file",
    "write_array",
    "write_csv",
]
