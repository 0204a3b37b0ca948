"""D-bar reconstruction toolkit for the 2-D inverse conductivity problem on the unit disc."""

__version__ = "0.1.0"
