"""
D.E.V.I 2.0 Test Suite

Comprehensive test suite for deterministic trading system.
"""




