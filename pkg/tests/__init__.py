"""jmgtlab tests."""
