"""Command-line entry points: world generation, episodes, benchmarks, training and plots."""
