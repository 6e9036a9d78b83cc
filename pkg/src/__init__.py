"""Decision Eval - decision-theory evaluation toolkit for risky choice and preference inference"""

__version__ = "0.1.0"
