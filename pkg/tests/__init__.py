"""Test suite for the homogenize package."""
