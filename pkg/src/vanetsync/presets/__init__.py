"""Shipped scenario files (.scn); loaded by vanetsync.scenario.load_preset."""
