"""Cavity-driven spin squeezing: dark states, master equations, mean-field optimization."""
