"""diracfig: vector figures from diraclab CSV/JSON artifacts."""

from .render import KINDS, RenderResult, SchemaError, render

__version__ = "0.1.0"
