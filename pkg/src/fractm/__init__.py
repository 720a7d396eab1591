"""Grid computations for exponential integral functionals on H^(1/2)(R).

Modules: ``function_space`` (grids, norms, dilation), ``functionals``,
``moser``, ``rearrangement``, ``optimize`` and the ``cli`` driver.
"""

__version__ = "0.1.0"
