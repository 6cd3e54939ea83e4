"""Figure rendering for sampler run artifacts."""

from .artifacts import ArtifactError, RunArtifacts
from .render import FIGURE_KINDS, render

__all__ = ["ArtifactError", "FIGURE_KINDS", "RunArtifacts", "render"]
