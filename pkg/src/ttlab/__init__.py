"""Desk-scale laboratory for filtered graph self-maps.

The pieces, bottom up: marked graphs with tight edge paths (``graphs``),
filtration-respecting self-maps with spectra and periodic-path certificates
(``trackmap``), the two-tier length calculus (``path_metrics``), empirical
flaring verifiers (``flaring``), the coned tree with its exact metric
(``conetree``), mapping-torus windows (``suspension``), commuting-power
lattices (``disintegration``), and a JSON document interface (``document``,
``cli``).
"""

__version__ = "0.1.0"
