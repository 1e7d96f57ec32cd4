"""Multiscale sliding chord descriptors for leaf images.

Typical use::

    from mscm.image import load_leaf
    from mscm.descriptor import leaf_contour, raw_descriptor

    leaf = load_leaf("c001/U_1.png")
    raw = raw_descriptor(leaf, leaf_contour(leaf))
"""

__version__ = "0.1.0"
