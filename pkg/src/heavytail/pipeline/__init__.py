"""Package initialization for pipeline."""
