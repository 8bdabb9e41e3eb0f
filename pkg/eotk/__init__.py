"""eotk - Electro-Optic Transducer Toolkit."""

__version__ = "0.1.0"
