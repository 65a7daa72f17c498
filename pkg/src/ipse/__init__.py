"""Feature-direction learning and iterative policy-space expansion."""
