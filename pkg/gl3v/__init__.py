"""gl3v: numerical GL(3) Voronoi summation and twisted-sum experiments."""
from .versionString import vstr as __version__
