"""Residuals, energy ledgers, div-curl recovery and runtime monitors."""
