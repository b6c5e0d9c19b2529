"""Monomer-dimer model on finite regions of Z^d."""
