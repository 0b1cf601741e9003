"""Nonparametric online estimation of multivariate Hawkes processes."""

__version__ = "0.1.0"

from .baselines import ogd_exp_fit
from .discretize import DomainError, UpdateGrid, build_grid
from .extensions import CellGrid, MarkedHyper, fit_marked, shp_fit
from .kernels import GaussianKernel, KernelExpansion, LaplacianKernel, PolynomialKernel
from .metrics import MetricReport, l1_error, stability_probe
from .npole import FitResult, HyperParams, StepSchedule, fit, project_grid_clip, sweep_hyper
from .process import EventFormatError, EventStream, HawkesModel, benchmark_model, read_events, simulate, write_events

__all__ = [
    "CellGrid",
    "DomainError",
    "EventFormatError",
    "EventStream",
    "FitResult",
    "GaussianKernel",
    "HawkesModel",
    "HyperParams",
    "KernelExpansion",
    "LaplacianKernel",
    "MarkedHyper",
    "MetricReport",
    "PolynomialKernel",
    "StepSchedule",
    "UpdateGrid",
    "benchmark_model",
    "build_grid",
    "fit",
    "fit_marked",
    "l1_error",
    "ogd_exp_fit",
    "project_grid_clip",
    "read_events",
    "shp_fit",
    "simulate",
    "stability_probe",
    "sweep_hyper",
    "write_events",
]
