"""Induced bounded cohomology classes on a twice-punctured disk.

Evaluates cochains on the free group F2 pulled back to area-preserving
finger-pushing maps of a planar model surface, exactly (region tables)
and by Monte Carlo.
"""

from bcoh.words import Word, parse_word

__all__ = ["Word", "parse_word"]
__version__ = "0.1.0"
