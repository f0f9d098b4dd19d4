"""Virtual element methods on polygonal meshes, with a verification lab."""

__version__ = "0.1.0"
