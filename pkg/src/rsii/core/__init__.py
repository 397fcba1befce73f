"""Core building blocks of the rsii pipeline."""
