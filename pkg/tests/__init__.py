"""
Test suite for the CV-QKD coexistence planner.
"""
