"""thermofit: joint identification of an elemental Young's-modulus field and
a nodal temperature field of a one-way thermo-mechanically coupled 2D
structure from sparse displacement and temperature sensors."""

__version__ = "0.1.0"
