"""Physics modules for the Jahn-Teller chain: lattice, mean-field, spin-wave and exact oracle."""
