"""Phase-space simulation and verification lab for the 3D massive
relativistic Vlasov-Nordstrom system."""

__version__ = "0.1.0"
