"""Mean-variance team stochastic games: exact evaluation, policy iteration,
a sample-based trust-region learner and a microgrid benchmark."""
from .chain_analytics import PolicyEval, evaluate
from .game_model import JointPolicy, TsgModel, mix, random_toy_game
from .tolerances import Tolerances

__all__ = ["JointPolicy", "PolicyEval", "Tolerances", "TsgModel", "evaluate", "mix", "random_toy_game"]
__version__ = "0.1.0"
