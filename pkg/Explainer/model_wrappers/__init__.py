"""Transformations layered on the base models: neuralization, LRP and baseline explainers."""

__all__ = ['neuralize', 'lrp_explainer', 'baseline_explainers', 'explainers']
