"""Symmetry-preserving discretizations on periodic structured curvilinear grids."""
