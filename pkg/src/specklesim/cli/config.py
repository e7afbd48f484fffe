"""Run-configuration document: schema, validation, object construction.

One UTF-8 key-value tree file (YAML; JSON is a subset) drives every
command.  Unknown keys are rejected at every level so that typos fail
loudly; the normalized document is embedded verbatim into the run manifest,
and reloading a manifest's config reproduces the run bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from ..core.beams import BeamComponent, BeamSpec, GaussianEnvelope
from ..core.covariance import CovarianceModel
from ..core.grids import TransverseGrid
from ..core.regimes import RegimeScaling
from ..errors import ConfigurationError
from ..propagate import EnsembleSpec

EXPERIMENT_KINDS = ("check-covariance", "simulate", "moments", "verify", "moment-pde")

# section -> key -> (type check, required)
_NUM = (int, float)
_SCHEMA = {
    "covariance": {
        "kind": (str, True),
        "sigma2": (_NUM, False),
        "ell": (_NUM, False),
        "nodes": (list, False),
        "values": (list, False),
    },
    "regime": {
        "kind": (str, True),
        "epsilon": (_NUM, True),
        "beta": (_NUM, True),
        "k0": (_NUM, True),
        "eta": (_NUM, False),
    },
    "beam": {"components": (list, True)},
    "grid": {"n": (int, True), "L": (_NUM, True)},
    "propagation": {"z_final": (_NUM, True), "n_steps": (int, True)},
    "ensemble": {
        "n_realizations": (int, True),
        "seed": (int, True),
        "store_intensity_fields": (bool, False),
    },
    "moments": {
        "z": (list, True),
        "r": (list, True),
        "pairs": (list, True),
        "evaluators": (list, False),
    },
    "verify": {
        "input": (str, True),
        "expect_fail": (bool, False),
        "probe": (int, False),
        "gap_probes": (list, False),
        "gap_max": (_NUM, False),
        "scint_band": (list, False),
        "box_cells": (list, False),
    },
    "momentpde": {
        "p": (int, True),
        "q": (int, True),
        "n_v": (int, True),
        "extent": (_NUM, True),
        "z": (_NUM, True),
        "dz": (_NUM, False),
        "psi_width": (_NUM, False),
        "epsilons": (list, False),
        "deltas": (list, False),
        "bounds": (bool, False),
        "save_measures": (bool, False),
    },
}
_COMPONENT_KEYS = {"amplitude": (_NUM, True), "width": (_NUM, True),
                   "center": (list, True), "kvec": (list, True)}

_REQUIRED_SECTIONS = {
    "check-covariance": ("covariance", "regime"),
    "simulate": ("covariance", "regime", "beam", "grid", "propagation", "ensemble"),
    "moments": ("covariance", "regime", "beam", "grid", "moments"),
    "verify": ("verify",),
    "moment-pde": ("covariance", "regime", "momentpde"),
}


def _type_ok(value, types) -> bool:
    if types is bool:
        return isinstance(value, bool)
    if isinstance(value, bool):  # bools only satisfy explicit bool specs
        return False
    return isinstance(value, types)


def _check_keys(name: str, data: dict, schema: dict) -> None:
    if not isinstance(data, dict):
        raise ConfigurationError(f"section {name!r} must be a mapping")
    for key in data:
        if key not in schema:
            raise ConfigurationError(f"unknown key {name}.{key}")
    for key, (types, required) in schema.items():
        if key in data:
            if not _type_ok(data[key], types):
                raise ConfigurationError(
                    f"{name}.{key} has the wrong type ({type(data[key]).__name__})"
                )
        elif required:
            raise ConfigurationError(f"missing required key {name}.{key}")


@dataclass(eq=False)
class RunConfig:
    """Validated configuration tree with typed object builders."""

    data: dict

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        text = Path(path).read_text(encoding="utf-8")
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"cannot parse config: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigurationError("config root must be a mapping")
        known = set(_SCHEMA) | {"experiment", "probes"}
        for key in raw:
            if key not in known:
                raise ConfigurationError(f"unknown top-level key {key!r}")
        if "experiment" in raw:
            exp = raw["experiment"]
            if not isinstance(exp, dict) or set(exp) - {"kind"}:
                raise ConfigurationError("experiment takes exactly the key 'kind'")
            if exp.get("kind") not in EXPERIMENT_KINDS:
                raise ConfigurationError(f"experiment.kind must be one of {EXPERIMENT_KINDS}")
        for name, schema in _SCHEMA.items():
            if name in raw:
                _check_keys(name, raw[name], schema)
        if "beam" in raw:
            for i, comp in enumerate(raw["beam"]["components"]):
                _check_keys(f"beam.components[{i}]", comp, _COMPONENT_KEYS)
        return cls(raw)

    # -- accessors -----------------------------------------------------------

    @property
    def experiment_kind(self) -> str | None:
        return self.data.get("experiment", {}).get("kind")

    def require_sections(self, kind: str) -> None:
        for section in _REQUIRED_SECTIONS[kind]:
            if section not in self.data:
                raise ConfigurationError(f"{kind} runs need a {section!r} section")

    @property
    def dimension(self) -> int:
        if "beam" in self.data:
            return len(self.data["beam"]["components"][0]["center"])
        return 1

    def build_model(self) -> CovarianceModel:
        cov = self.data["covariance"]
        kind = cov["kind"]
        if kind == "gaussian":
            return CovarianceModel("gaussian", float(cov.get("sigma2", 1.0)),
                                   float(cov.get("ell", 1.0)), self.dimension)
        if kind == "tabulated-spectrum":
            if "nodes" not in cov or "values" not in cov:
                raise ConfigurationError("tabulated covariance needs nodes and values")
            return CovarianceModel("tabulated-spectrum", d=self.dimension,
                                   spectrum_nodes=np.asarray(cov["nodes"], float),
                                   spectrum_values=np.asarray(cov["values"], float))
        raise ConfigurationError(f"unknown covariance.kind {kind!r}")

    def build_scaling(self) -> RegimeScaling:
        reg = self.data["regime"]
        return RegimeScaling(reg["kind"], float(reg["epsilon"]), float(reg["beta"]),
                             float(reg["k0"]), eta_override=reg.get("eta"))

    def build_beam(self) -> BeamSpec:
        reg = self.data["regime"]
        comps = []
        for comp in self.data["beam"]["components"]:
            env = GaussianEnvelope(complex(comp["amplitude"]), float(comp["width"]),
                                   np.asarray(comp["center"], float))
            comps.append(BeamComponent(env, np.asarray(comp["kvec"], float)))
        return BeamSpec(tuple(comps), float(reg["beta"]), float(reg["epsilon"]))

    def build_grid(self) -> TransverseGrid:
        g = self.data["grid"]
        return TransverseGrid(self.dimension, int(g["n"]), float(g["L"]))

    def probes(self) -> tuple[tuple[int, ...], ...]:
        if "probes" not in self.data:
            raise ConfigurationError("this run needs a probes list")
        out = []
        for p in self.data["probes"]:
            idx = (p,) if isinstance(p, int) else tuple(int(i) for i in p)
            if len(idx) != self.dimension:
                raise ConfigurationError(f"probe {p!r} has wrong dimension")
            out.append(idx)
        return tuple(out)

    def build_ensemble_spec(self, seed_override: int | None = None) -> EnsembleSpec:
        ens = self.data["ensemble"]
        prop = self.data["propagation"]
        seed = int(ens["seed"]) if seed_override is None else int(seed_override)
        return EnsembleSpec(
            beam=self.build_beam(),
            model=self.build_model(),
            scaling=self.build_scaling(),
            grid=self.build_grid(),
            z_final=float(prop["z_final"]),
            n_steps=int(prop["n_steps"]),
            n_realizations=int(ens["n_realizations"]),
            seed=seed,
            probes=self.probes(),
            store_intensity_fields=bool(ens.get("store_intensity_fields", False)),
        )

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=True)
