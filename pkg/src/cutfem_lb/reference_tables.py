"""Published sphere-benchmark values used to cross-check the rate formula."""

# N, then e_h for tau0 = 1, 0.1, 0.01, 0
ERRORS = {
    "N": (406, 1513, 6013, 24071),
    1.0: (0.0142, 0.0078, 0.0028, 0.0008),
    0.1: (0.0052, 0.0017, 0.0004, 0.0001),
    0.01: (0.00230, 0.00070, 0.00018, 0.00004),
    0.0: (0.00190, 0.00057, 0.00014, 0.00003),
}
ERROR_RATES = {
    1.0: (0.91, 1.49, 1.82),
    0.1: (1.70, 1.93, 1.97),
    0.01: (1.82, 1.98, 2.03),
    0.0: (1.82, 2.01, 2.05),
}

# condition numbers x 1e-4
CONDITION = {
    "N": (406, 1513, 6013, 24071),
    1.0: (0.5383, 1.3350, 5.5484, 22.359),
    0.01: (0.1038, 0.2001, 0.7595, 2.9865),
    0.0: (0.2044, 0.4036, 3.5110, 69.530),
    "diag": (0.0170, 0.0600, 0.2175, 0.9354),
}
CONDITION_RATES = {
    1.0: (-1.38, -2.06, -2.01),
    0.01: (-1.00, -1.93, -1.97),
    0.0: (-1.03, -3.14, -4.31),
    "diag": (-1.92, -1.87, -2.10),
}
