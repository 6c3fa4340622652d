"""Exact-arithmetic lattice geometry toolkit.

Everything certified here is computed over the rationals: Gram matrices,
shells, designs, glue groups, isometries and sublattice scans.  Floating
point is used only inside enumeration prefilters whose output is always
re-verified exactly.
"""

from perflat.lattice import Lattice, Shell, SublatticeTransform

__all__ = ["Lattice", "Shell", "SublatticeTransform"]

__version__ = "0.1.0"
