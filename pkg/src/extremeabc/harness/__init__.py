"""File formats, configuration, evaluation, studies and the CLI."""
from .config import ModelSpec, StudyConfig, load_config
from .evaluation import MseResult, band_coverage, mse_curve
from .exposure import ExposureReport, predict_exposure
from .io import load_panel, load_sites, save_panel, save_sites
from .study import StudyReport, run_simulation_study

__all__ = [
    "ModelSpec", "StudyConfig", "load_config", "MseResult", "mse_curve", "band_coverage", "ExposureReport",
    "predict_exposure", "load_panel", "load_sites", "save_panel", "save_sites", "StudyReport",
    "run_simulation_study",
]
