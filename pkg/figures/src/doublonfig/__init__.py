"""Figure rendering for doublonlab output bundles."""

from .bundle import BundleError, RunBundle
from .plots import plot_bands, plot_field, plot_lightcone, plot_populations

__all__ = ["BundleError", "RunBundle", "plot_bands", "plot_field",
           "plot_lightcone", "plot_populations"]
