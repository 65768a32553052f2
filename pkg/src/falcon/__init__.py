"""Desk-scale simulated loco-manipulation stack: a planar legged base and a
mounted arm driven by two decoupled diffusion policies that share a single
vision-language conditioning latent with an explicit task-progress estimate,
trained from scripted demonstrations with a coordination-aware contrastive
objective.
"""

__version__ = "0.1.0"
