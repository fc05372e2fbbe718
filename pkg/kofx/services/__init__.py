"""Composition layer used by the command line."""
