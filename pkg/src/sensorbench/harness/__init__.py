"""Dataset I/O, evaluation, case-study formulas, benchmark runner and CLI."""
