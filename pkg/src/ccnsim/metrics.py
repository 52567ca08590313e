"""Per-node counters and the computational complexity metric.

Complexity counting sites (one unit each):

=====================================  =========================================
site                                   where
=====================================  =========================================
fired routing timer event              NFP hello tick, advertisement tick, flood
neighbor table operation               lookup/create/refresh/state change/erase
prefix table operation                 lookup/insert/update/state change
loop iteration                         advertisements and withdraws in a
                                       received or built message; predecessor
                                       sets when syncing the FIB; neighbors
                                       and prefix entries in periodic scans
PIT operation                          receive Interest, satisfy
FIB probe iteration                    every prefix length tried by lookup
=====================================  =========================================

Absolute values depend on these choices; trends across scenarios are what
the metric is for.
"""

from __future__ import annotations

from collections import Counter

COMPLEXITY = "complexity"


def count_complexity(counters: Counter, units: int = 1) -> None:
    if units <= 0:
        raise ValueError("complexity units must be positive")
    counters[COMPLEXITY] += units
