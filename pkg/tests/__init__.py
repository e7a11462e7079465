"""Wikityp Tests."""
