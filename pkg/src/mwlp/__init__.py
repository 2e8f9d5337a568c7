"""Matrix-weighted Littlewood-Paley and wavelet norms on the periodic grid."""
__version__ = "0.1.0"
