"""Interpretable model families: linear/logistic, GAM, rule sets, decision trees, k-NN."""
from .base import (FAMILIES, Model, Prediction, UnsupportedTaskError, decision_values, encode_instances,
                   fit_arrays, fit_model, load_model, model_from_dict, model_to_dict, predict, predict_ids,
                   predict_proba, save_model, true_label_confidence)
from .gam import GamModel, InteractionShape, ShapeFunction, fit_gam, predict_gam, quantile_edges
from .knn import METRICS, InstanceModel, Neighbor, predict_knn
from .linear import FitError, LinearModel, fit_linear, fit_logistic, objective, predict_linear, sigmoid, \
    smooth_gradient, smooth_loss
from .rules import Condition, Rule, RuleSet, learn_rules, predict_rules, rule_covers
from .tree import DecisionTree, Node, decision_path, induce_tree, leaf_node, predict_tree, split_node

__all__ = [
    "FAMILIES", "Model", "Prediction", "UnsupportedTaskError", "decision_values", "encode_instances",
    "fit_arrays", "fit_model", "load_model", "model_from_dict", "model_to_dict", "predict", "predict_ids",
    "predict_proba", "save_model", "true_label_confidence",
    "GamModel", "InteractionShape", "ShapeFunction", "fit_gam", "predict_gam", "quantile_edges",
    "METRICS", "InstanceModel", "Neighbor", "predict_knn",
    "FitError", "LinearModel", "fit_linear", "fit_logistic", "objective", "predict_linear", "sigmoid",
    "smooth_gradient", "smooth_loss",
    "Condition", "Rule", "RuleSet", "learn_rules", "predict_rules", "rule_covers",
    "DecisionTree", "Node", "decision_path", "induce_tree", "leaf_node", "predict_tree", "split_node",
]
