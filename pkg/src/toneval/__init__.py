"""toneval - phonologically informed ASR evaluation."""

__version__ = "0.1.0"
