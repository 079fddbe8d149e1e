# Tests for hyperbolic_tev
