"""
Sim-to-real gesture recognition with kinematic and visual domain adaptation.

Trains gesture classifiers on labeled simulator segments and adapts them to
unlabeled real-robot segments through adversarial feature alignment.
"""

__version__ = "1.0.0"
