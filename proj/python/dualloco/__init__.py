"""Python bindings for the dualloco C++ core."""

try:
    from ._dualloco import *  # installed wheel layout
except ImportError:  # build tree: the module sits next to this package on PYTHONPATH
    from _dualloco import *
