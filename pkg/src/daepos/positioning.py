"""kNN fingerprinting positioner.

A query scan is located by finding the k reference signatures closest in
RSSI space (Euclidean distance over imputed dBm vectors) and averaging
their known positions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError, DatasetError
from .signatures import (
    DEFAULT_FILL_DBM,
    ApRegistry,
    Position2D,
    RadioSignature,
    feature_matrix,
    reference_matrix,
)

DEFAULT_K = 4


@dataclass(frozen=True)
class RadioMap:
    """Immutable fingerprinting database: feature vectors plus references."""

    registry: ApRegistry
    vectors: np.ndarray  # (n, width) imputed dBm
    references: np.ndarray  # (n, 2) meters
    point_ids: tuple[str, ...]

    def __post_init__(self):
        # own copies, frozen: the map must stay valid if the source arrays change
        vectors = np.array(self.vectors, dtype=float)
        references = np.array(self.references, dtype=float)
        if vectors.ndim != 2 or vectors.shape[1] != len(self.registry):
            raise ContractError(
                f"map vectors must be (n, {len(self.registry)}), got {vectors.shape}"
            )
        if references.shape != (len(vectors), 2):
            raise ContractError("map references must be (n, 2) and match the vectors")
        if len(self.point_ids) != len(vectors):
            raise ContractError("one point_id per map entry required")
        vectors.setflags(write=False)
        references.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "references", references)

    def __len__(self) -> int:
        return len(self.vectors)

    @classmethod
    def from_signatures(
        cls,
        signatures: Sequence[RadioSignature],
        registry: ApRegistry,
        fill: float = DEFAULT_FILL_DBM,
    ) -> "RadioMap":
        return cls(
            registry=registry,
            vectors=feature_matrix(signatures, registry, fill),
            references=reference_matrix(signatures),
            point_ids=tuple(s.point_id for s in signatures),
        )


@dataclass(frozen=True)
class PositionEstimate:
    position: Position2D
    neighbor_indices: tuple[int, ...]
    neighbor_distances: tuple[float, ...]


def rssi_distance(a, b) -> float:
    """Euclidean distance between two equal-length dBm vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError(f"vector widths differ: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def localize(query, radio_map: RadioMap, k: int = DEFAULT_K, weighted: bool = False) -> PositionEstimate:
    """Estimate the position of ``query`` against ``radio_map`` with k-NN.

    Neighbors are the k map entries at smallest RSSI distance; ties at the
    k-th distance are resolved in favor of the lower map-entry index.  The
    estimate is the unweighted mean of the neighbors' reference positions,
    or their inverse-distance weighted mean when ``weighted`` is set.
    """
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    if len(radio_map) < k:
        raise DatasetError(f"radio map has {len(radio_map)} entries, fewer than k={k}")
    query = np.asarray(query, dtype=float)
    if query.shape != (radio_map.vectors.shape[1],):
        raise ContractError(
            f"query width {query.shape} does not match map width ({radio_map.vectors.shape[1]},)"
        )

    dists = np.sqrt(np.sum((radio_map.vectors - query) ** 2, axis=1))
    order = np.argsort(dists, kind="stable")
    idx = order[:k]
    neighbor_dists = dists[idx]
    refs = radio_map.references[idx]

    if weighted:
        zero = neighbor_dists == 0.0
        if zero.any():
            # Exact fingerprint matches dominate: average only those.
            pos = refs[zero].mean(axis=0)
        else:
            w = 1.0 / neighbor_dists
            pos = (refs * w[:, None]).sum(axis=0) / w.sum()
    else:
        pos = refs.mean(axis=0)

    return PositionEstimate(
        position=Position2D(float(pos[0]), float(pos[1])),
        neighbor_indices=tuple(int(i) for i in idx),
        neighbor_distances=tuple(float(d) for d in neighbor_dists),
    )
