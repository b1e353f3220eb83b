"""Cut finite elements for the Laplace-Beltrami problem on level-set surfaces."""
from .levelset import AnalyticSurface, circle, sphere
from .mesh import BackgroundMesh, build_background_mesh
from .experiments import ExperimentConfig, discretize, run

__all__ = ["AnalyticSurface", "BackgroundMesh", "ExperimentConfig", "build_background_mesh",
           "circle", "discretize", "run", "sphere"]
