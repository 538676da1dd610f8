"""Simulator for noisy parallel broadcast with erasures."""
