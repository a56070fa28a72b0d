"""D2D overlay test suite."""
