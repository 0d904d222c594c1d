"""facegen: generate faces from textual descriptions.

The pipeline keeps the image generator and the sentence encoder frozen and
trains a single regression network that maps sentence embeddings to the
512-dimensional latent vectors the generator consumes. The package also
contains the synthetic dataset builder, a deterministic toy generator used
for all tests, and an HTTP service for interactive refinement.
"""

__version__ = "0.1.0"

from .types import LATENT_DIM  # noqa: E402,F401
