"""Log-scale quasimodes scarring on a closed geodesic: normal forms, squeezed
wavepackets, time averaging and collar residuals."""

__version__ = "0.1.0"
