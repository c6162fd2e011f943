"""Conditional-symmetry verification and reduction for u_t = u_xx + k(x) u^2 (1 - u)."""
