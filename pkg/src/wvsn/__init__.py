"""Cross-layer video delivery simulator for wireless video sensor networks."""
