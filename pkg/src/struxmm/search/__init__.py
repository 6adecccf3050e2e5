"""Search pipeline: flip walks, symmetry sampling and Hensel lifting."""
