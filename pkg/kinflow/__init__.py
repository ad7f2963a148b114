"""kinflow: mollified Boltzmann and Fleming-Viot flows with a seeded verification harness"""

__version__ = "1.0.0"
