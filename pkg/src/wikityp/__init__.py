"""
Wikityp - Stadttypologie-Vorhersage aus Wikipedia-Seiten.
"""

__version__ = "0.1.0"
