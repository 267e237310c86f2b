"""Persuasion, mediation and cheap-talk solvers for sender-receiver games."""
