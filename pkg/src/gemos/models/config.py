"""Hyperparameter bundle shared by all scorer kinds."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from gemos.errors import ValidationError

SCORER_KINDS = ("gmm", "pca", "iforest", "lof")


@dataclass(frozen=True)
class ScorerConfig:
    """Which scorer to fit and with what hyperparameters.

    Only the fields relevant to ``kind`` are consulted at fit time;
    the rest ride along so a config can be echoed verbatim into
    serialized models.
    """

    kind: str = "gmm"
    num_components: int = 8  # GMM component count / PCA retained components
    num_trees: int = 100
    subsample_size: int = 256
    k_neighbors: int = 20
    em_tolerance: float = 1e-4
    em_max_iters: int = 200
    em_restarts: int = 3
    rng_seed: int = 42

    def validated(self) -> "ScorerConfig":
        """Return self after checking invariants.

        Raises:
            ValidationError: unknown kind, non-positive count, or
                non-positive tolerance.
        """
        if self.kind not in SCORER_KINDS:
            raise ValidationError(
                f"unknown scorer kind {self.kind!r}; expected one of {SCORER_KINDS}"
            )
        counts = {
            "num_components": self.num_components,
            "num_trees": self.num_trees,
            "subsample_size": self.subsample_size,
            "k_neighbors": self.k_neighbors,
            "em_max_iters": self.em_max_iters,
            "em_restarts": self.em_restarts,
        }
        for name, value in counts.items():
            if int(value) <= 0:
                raise ValidationError(f"{name} must be positive, got {value}")
        if not self.em_tolerance > 0:
            raise ValidationError(
                f"em_tolerance must be positive, got {self.em_tolerance}"
            )
        return self

    def with_(self, **kwargs) -> "ScorerConfig":
        return replace(self, **kwargs)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "num_components": int(self.num_components),
            "num_trees": int(self.num_trees),
            "subsample_size": int(self.subsample_size),
            "k_neighbors": int(self.k_neighbors),
            "em_tolerance": float(self.em_tolerance),
            "em_max_iters": int(self.em_max_iters),
            "em_restarts": int(self.em_restarts),
            "rng_seed": int(self.rng_seed),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScorerConfig":
        return cls(
            kind=str(d["kind"]),
            num_components=int(d["num_components"]),
            num_trees=int(d["num_trees"]),
            subsample_size=int(d["subsample_size"]),
            k_neighbors=int(d["k_neighbors"]),
            em_tolerance=float(d["em_tolerance"]),
            em_max_iters=int(d["em_max_iters"]),
            em_restarts=int(d["em_restarts"]),
            rng_seed=int(d["rng_seed"]),
        )
