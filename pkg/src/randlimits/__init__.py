"""Random inductive limits of C*-algebras, simulated and computed exactly.

Submodules:

``markov``      birth-death walks with exact absorption and hitting probabilities
``uhf``         supernatural numbers driven by a walk on the primes
``simplex``     towers of simplices and their representing matrices
``villadsen``   the random radius of comparison
``graphs``      random regular multigraphs and graph-algebra predicates
``ktheory``     Smith normal form, K-groups, limiting cokernel laws
``harness``     declarative experiments with reproducible parallel seeding
"""

__version__ = "0.1.0"
