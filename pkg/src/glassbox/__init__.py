"""Interpretable-by-design models with fairness, privacy, causal and Rashomon-set audits."""
from . import causal, data, explain, fairness, models, privacy, rashomon
from .data import Dataset, Schema, generate_covid_toy, load_csv, load_schema
from .models import Model, fit_model, load_model, predict, save_model

__version__ = "0.1.0"

__all__ = [
    "causal", "data", "explain", "fairness", "models", "privacy", "rashomon",
    "Dataset", "Schema", "generate_covid_toy", "load_csv", "load_schema",
    "Model", "fit_model", "load_model", "predict", "save_model",
]
