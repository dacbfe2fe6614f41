"""Noncoherent SWIPT decode-and-forward relay simulator.

Modules: :mod:`specfun` (the relay-link integral and its approximations),
:mod:`distributions`, :mod:`transition`, :mod:`channel`, :mod:`detectors`,
:mod:`montecarlo`, :mod:`presets` and :mod:`cli`.
"""

__version__ = "0.1.0"
