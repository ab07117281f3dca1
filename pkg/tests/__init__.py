"""Test suite for the Bonferroni FWER toolkit."""
