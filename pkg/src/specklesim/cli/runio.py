"""Persistence: binary arrays with sidecars, CSV tables, run manifests.

Binary arrays are raw little-endian IEEE-754; complex data is stored as
numpy complex128, i.e. interleaved (real, imag) float64 pairs.  Every array
``name.bin`` carries a sidecar ``name.json`` with shape, dtype, byte order,
axis semantics and units.  Manifests record the exact config, the master
seed, tool version, wall clock, and a sha256 per emitted file; re-running a
manifest's config reproduces identical checksums.
"""

from __future__ import annotations

import csv
import hashlib
import json
import subprocess
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import ConfigurationError

_DTYPES = {"complex128": "<c16", "float64": "<f8", "int64": "<i8"}


def write_array(base: Path, arr: np.ndarray, axes: list[str], units: str = "",
                extra_meta: dict | None = None) -> list[Path]:
    """Write name.bin plus name.json sidecar; returns the created paths."""
    base = Path(base)
    arr = np.ascontiguousarray(arr)
    name = arr.dtype.name
    if name not in _DTYPES:
        raise ConfigurationError(f"unsupported array dtype {name}")
    bin_path = base.with_suffix(".bin")
    bin_path.write_bytes(arr.astype(_DTYPES[name]).tobytes())
    meta = {
        "shape": list(arr.shape),
        "dtype": name,
        "byte_order": "little-endian",
        "axes": axes,
        "units": units,
    }
    if name == "complex128":
        meta["layout"] = "interleaved real/imag float64"
    if extra_meta:
        meta.update(extra_meta)
    json_path = base.with_suffix(".json")
    json_path.write_text(json.dumps(meta, indent=1), encoding="utf-8")
    return [bin_path, json_path]


def read_array(base: Path) -> np.ndarray:
    base = Path(base)
    meta = json.loads(base.with_suffix(".json").read_text(encoding="utf-8"))
    raw = base.with_suffix(".bin").read_bytes()
    arr = np.frombuffer(raw, dtype=_DTYPES[meta["dtype"]])
    return arr.reshape(meta["shape"]).astype(meta["dtype"])


def write_csv(path: Path, header: list[str], rows) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    return path


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=10,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except Exception:
        pass
    return "untracked"


@dataclass(eq=False)
class ManifestWriter:
    """Collects emitted files and finalizes the run manifest."""

    out_dir: Path
    config: dict
    seed: int | None = None

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._t0 = time.monotonic()
        self._paths: list[Path] = []

    def add(self, paths) -> None:
        if isinstance(paths, (str, Path)):
            paths = [paths]
        self._paths.extend(Path(p) for p in paths)

    def array(self, name: str, arr: np.ndarray, axes: list[str], units: str = "",
              extra_meta: dict | None = None) -> None:
        self.add(write_array(self.out_dir / name, arr, axes, units, extra_meta))

    def csv(self, name: str, header: list[str], rows) -> None:
        self.add(write_csv(self.out_dir / name, header, rows))

    def finalize(self) -> Path:
        checksums = {
            str(p.relative_to(self.out_dir)): sha256_file(p) for p in sorted(set(self._paths))
        }
        manifest = {
            "config": self.config,
            "seed": self.seed,
            "tool_version": __version__,
            "git_describe": git_describe(),
            "wall_clock_s": round(time.monotonic() - self._t0, 3),
            "checksums": checksums,
        }
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8")
        return path


def read_manifest(out_dir: Path) -> dict:
    path = Path(out_dir) / "manifest.json"
    if not path.exists():
        raise ConfigurationError(f"no manifest.json under {out_dir}")
    return json.loads(path.read_text(encoding="utf-8"))
