"""
CLI - command handlers for train, eval, predict, baseline and gradcheck.
"""
from .commands import cmd_baseline, cmd_eval, cmd_gradcheck, cmd_predict, cmd_train

__all__ = ["cmd_train", "cmd_eval", "cmd_predict", "cmd_gradcheck", "cmd_baseline"]
