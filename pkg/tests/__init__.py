"""Test suite for the Koopman operator filtering toolkit."""
