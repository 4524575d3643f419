"""Multi-frequency electrical impedance tomography of cracked, reinforced concrete on a disk.

Modules: ``scene`` (phantoms), ``mesh`` (triangulation), ``forward`` (FEM frames
and continuous-drive fields), ``spectro`` (contrast scalars), ``asymptotics``
(boundary expansions and pole recovery), ``reconstruct`` (difference imaging)
and ``cli``.
"""
from .errors import EISError
from .scene import Bar, Crack, Material, Scene, builtin_model, validate_scene

__all__ = ["Bar", "Crack", "EISError", "Material", "Scene", "builtin_model", "validate_scene"]
__version__ = "0.1.0"
