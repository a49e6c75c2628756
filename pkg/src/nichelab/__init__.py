"""(mu+1) EA niching laboratory: probabilistic crowding and restricted
tournament selection on OneMax/TwoMax, with exact oracles and an experiment
harness."""

__version__ = "0.1.0"
