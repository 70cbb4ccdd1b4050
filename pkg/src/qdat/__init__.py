"""Direct-action quantum field kernels, emission statistics and transactions.

A massless scalar stand-in for the photon on a periodic 1+1D box:

- :mod:`qdat.algebra`      exact identities between propagator kernels
- :mod:`qdat.propagators`  numerical kernels and the momentum-space Feynman route
- :mod:`qdat.currents`     classical sources and current-kernel-current overlaps
- :mod:`qdat.interaction`  Coulomb/radiative split, mean photon number, Poisson counts
- :mod:`qdat.transaction`  absorber completeness, coupling gate, Born-rule winners
- :mod:`qdat.cli`          scenario files in, canonical JSON reports out
"""

__version__ = "0.1.0"
