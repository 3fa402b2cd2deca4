"""Session-level web attack detection: HTTP trace features, feature selection,
five classifiers and a stratified cross-validation harness."""

__version__ = "0.1.0"
