"""
ABoB Bench: hierarchical adversarial bandits and their experiment harness
"""

__version__ = "1.0.0"
__author__ = "ABoB Bench Team"
