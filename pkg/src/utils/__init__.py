"""Utility modules for the Jahn-Teller chain."""
