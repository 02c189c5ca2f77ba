"""Non-stationary stochastic bandits: LM-DSEE, SW-UCB#, environments and a regret harness."""

__version__ = "0.1.0"
