"""Jump-aware piecewise-polynomial interpolation on simplicial meshes with embedded cracks."""
