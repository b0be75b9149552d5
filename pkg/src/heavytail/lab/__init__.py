"""Numerical library: tail laws, processes, spectra and limit laws."""
