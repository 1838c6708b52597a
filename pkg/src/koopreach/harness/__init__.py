"""CLI, persistence, benchmark pipelines and experiment drivers."""
