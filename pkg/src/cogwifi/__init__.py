"""cogwifi: deterministic Wi-Fi OBSS simulator with a cognitive controller.

Subsystems: scenario (configs, geometry, mobility), radio (link budget),
simulation (event loop), features (dataset builders), ml (learning
algorithms), controller (handover / AP-selection policies), experiments +
cli (evaluation pipelines).
"""

__version__ = "0.1.0"
