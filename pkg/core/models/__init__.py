"""
Core data models for MILSEQ
"""
