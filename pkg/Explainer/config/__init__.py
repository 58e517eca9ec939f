"""
Top-level package initializer for the `config` package.

Exposes the `Config` class from `config.py` so callers can write
`from config import Config`.
"""
from .config import Config

__all__ = ['Config']
