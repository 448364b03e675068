"""Sweep, figure, validation and critical-point drivers for the Jahn-Teller chain."""
