"""
Model engines.

Direction-oriented kinematic preprocessing, temporal-relation encoders,
kinematic-visual fusion, adversarial heads and losses, and the training loop.
"""
