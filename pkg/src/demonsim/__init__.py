"""demonsim: desk-scale simulations of measurement-powered qubit engines.

Four protocols built on a common quantum-state core:

* a discrete measure-then-kick extraction cycle with two-point energy
  bookkeeping (feedback module)
* a continuously monitored qubit whose diffusive record steers a final
  extraction pulse (trajectory module)
* a fully autonomous qubit-cavity machine where the feedback is wired into
  the Hamiltonian (autonomous module)
* a finite-rate erasure staircase probing the minimal work cost of
  resetting one bit (landauer module)

Everything uses hbar = k_B = 1 and quotes qubit energies in units of the
qubit frequency. Entropies and information are in nats unless a caller
converts for display.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
