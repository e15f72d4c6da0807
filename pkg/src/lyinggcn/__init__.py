"""Node-classification and graph-diffusion laboratory.

Core pieces: a small reverse-mode autodiff engine (numerics), graph
operators (graph), the lying propagation layers and their baselines
(layers), continuous diffusion analysis (dynamics), dataset tooling
(data), and the training / grid-search harness (experiments).
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"
__all__ = ["KERNEL_BACKEND", "__version__"]
