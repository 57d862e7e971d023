"""log2ns: statistical models of firewall flow logs paired with a formal
first-match policy solver, behind one query interface."""

__version__ = "0.1.0"
