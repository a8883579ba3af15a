"""Checkpoint, world and episode persistence plus CSV export."""
