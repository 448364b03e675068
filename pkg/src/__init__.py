"""
Jahn-Teller Chain - mean-field phase diagram and spin-wave fluctuations of spin-boson chains
"""

__version__ = "0.1.0"
