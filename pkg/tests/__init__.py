"""
Tests for the NLStruct Toolkit.
"""
