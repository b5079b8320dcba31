"""kdilation: small k-dilation maps between spheres, sampled dilation, Hopf invariants and filtration facts."""

__version__ = "0.1.0"
