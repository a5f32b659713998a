"""Typed point prompts shared by the trainer, model, and service."""

from __future__ import annotations

from dataclasses import dataclass

ROLES = ("task-prompt", "pcl-query", "pcl-negative")
PROVENANCES = ("ground-truth", "detected", "interactive", "bootstrap")


@dataclass(frozen=True)
class PointPrompt:
    position: tuple[int, int]  # (row, col), pixel units
    role: str
    provenance: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")


def task_point(position, provenance="ground-truth") -> PointPrompt:
    return PointPrompt(tuple(position), "task-prompt", provenance)
