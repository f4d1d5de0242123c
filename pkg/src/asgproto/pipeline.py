"""End-to-end driver: support shots -> prototypes -> allocation on the query."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .core import (
    DimMismatch,
    PrototypeSet,
    ProjectionWeights,
    SgcConfig,
    ValidationError,
    adaptive_prototype_count,
    as_feature_map,
    as_mask,
)
from .gpa import Allocation, allocate
from .kshot import merge_shots
from .sgc import sgc_cluster
from .tensorio import ensure_dir, read_tensor, to_gray, write_csv, write_pgm, write_tensor


@dataclass(frozen=True)
class SupportShot:
    feature: str
    mask: str


@dataclass(frozen=True)
class RunManifest:
    support: tuple[SupportShot, ...]
    query: str
    out: str
    config: dict = field(default_factory=dict)
    projection: str | None = None
    projection_bias: str | None = None
    csv: bool = False
    figures: bool = False

    @classmethod
    def from_json(cls, path) -> "RunManifest":
        """Load a manifest; relative paths resolve against the manifest's folder."""
        with open(path) as fh:
            raw = json.load(fh)
        base = os.path.dirname(os.path.abspath(path))

        def resolve(p):
            return None if p is None else os.path.join(base, p)

        try:
            support = tuple(
                SupportShot(resolve(s["feature"]), resolve(s["mask"])) for s in raw["support"]
            )
            cfg = dict(raw.get("config", {}))
            SgcConfig(**cfg)
            proj = raw.get("projection") or {}
            return cls(
                support=support,
                query=resolve(raw["query"]),
                out=resolve(raw.get("out", "out")),
                config=cfg,
                projection=resolve(proj.get("weights")),
                projection_bias=resolve(proj.get("bias")),
                csv=bool(raw.get("csv", False)),
                figures=bool(raw.get("figures", False)),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed manifest {path}: {exc!r}") from exc

    def with_overrides(self, **cfg_overrides) -> "RunManifest":
        cfg = dict(self.config)
        cfg.update({k: v for k, v in cfg_overrides.items() if v is not None})
        SgcConfig(**cfg)
        return replace(self, config=cfg)

    @property
    def sgc_config(self) -> SgcConfig:
        return SgcConfig(**self.config)


@dataclass
class ShotReport:
    n_m: int
    n_sp: int
    fallback: bool


@dataclass
class RunResult:
    shots: list[ShotReport]
    prototypes: PrototypeSet
    allocation: Allocation
    written: dict[str, np.ndarray]


def _load_feature(path) -> np.ndarray:
    arr = read_tensor(path)
    if arr.dtype == np.bool_ or arr.ndim != 3:
        raise DimMismatch(f"{path}: expected a 3-D f32 feature map, got {arr.dtype} {arr.shape}")
    return arr


def _load_mask(path) -> np.ndarray:
    arr = read_tensor(path)
    if arr.dtype != np.bool_ or arr.ndim != 2:
        raise DimMismatch(f"{path}: expected a 2-D u8 mask, got {arr.dtype} {arr.shape}")
    return arr


def _load_projection(manifest: RunManifest) -> ProjectionWeights | None:
    if manifest.projection is None:
        return None
    matrix = read_tensor(manifest.projection)
    bias = read_tensor(manifest.projection_bias) if manifest.projection_bias else None
    return ProjectionWeights(matrix, bias)


def run_pipeline(manifest: RunManifest, log: Callable[[str], None] = print) -> RunResult:
    """Run every stage and write the artifacts into ``manifest.out``.

    Returns the arrays exactly as written to disk (float32 where the file
    format stores f32) so callers can compare them with re-read files.
    """
    if not manifest.support:
        raise ValidationError("manifest needs at least one support shot")
    cfg = manifest.sgc_config
    query = _load_feature(manifest.query)
    proj = _load_projection(manifest)

    sets, reports = [], []
    for k, shot in enumerate(manifest.support):
        feat = as_feature_map(_load_feature(shot.feature))
        if feat.shape[0] != query.shape[0]:
            raise DimMismatch(
                f"shot {k}: support has {feat.shape[0]} channels, query has {query.shape[0]}"
            )
        mask = as_mask(_load_mask(shot.mask), feat.shape[1:])
        n_m = int(mask.sum())
        n = adaptive_prototype_count(n_m, cfg)
        protos = sgc_cluster(feat, mask, cfg, shot=k)
        report = ShotReport(n_m=n_m, n_sp=protos.count, fallback=n <= 1)
        reports.append(report)
        note = " (fallback: masked average pooling)" if report.fallback else ""
        log(f"shot {k}: N_m={n_m} N_sp={report.n_sp}{note}")
        sets.append(protos)

    protos = merge_shots(sets)
    log(f"total N_sp={protos.count}")
    alloc = allocate(protos, query, proj)

    out = ensure_dir(manifest.out)
    written = {}

    def put(name, value):
        path = os.path.join(out, name)
        write_tensor(path, value)
        written[name] = np.asarray(value, dtype=np.float32)

    put("prototypes.asgt", protos.vectors)
    put("probability_map.asgt", alloc.probability)
    put("merged.asgt", alloc.merged)
    write_pgm(os.path.join(out, "guide_map.pgm"), alloc.guide, maxval=65535)
    n_sp = protos.count
    write_pgm(os.path.join(out, "probability_map.pgm"), to_gray(alloc.probability, n_sp))
    with open(os.path.join(out, "prototype_shots.csv"), "w") as fh:
        fh.write("index,shot\n")
        for i, s in enumerate(protos.shots):
            fh.write(f"{i},{s}\n")
    for i, plane in enumerate(alloc.similarity):
        stem = f"similarity_{i:02d}"
        put(f"{stem}.asgt", plane)
        write_pgm(os.path.join(out, f"{stem}.pgm"), to_gray(plane, 1.0))
        if manifest.csv:
            write_csv(os.path.join(out, f"{stem}.csv"), plane)
    if manifest.csv:
        write_csv(os.path.join(out, "probability_map.csv"), alloc.probability)
        write_csv(os.path.join(out, "guide_map.csv"), alloc.guide)
    if manifest.figures:
        from .plotting import save_allocation_figures

        save_allocation_figures(alloc, os.path.join(out, "figures"))
    log(f"wrote artifacts to {out}")
    return RunResult(reports, protos, alloc, written)
