"""Small bundled CSV datasets for demos and smoke benchmarks.

Each file is a two-feature classification problem with a non-linear class
structure, sized so a replicated experiment finishes in seconds:

- ``ring``: an inner disk against a surrounding annulus.
- ``xor_blobs``: four Gaussian blobs labeled in an XOR pattern.
- ``stripes``: three diagonal bands with alternating labels.
"""

from importlib import resources
from pathlib import Path

BUNDLED = ("ring", "xor_blobs", "stripes")


def dataset_path(name: str) -> Path:
    """Filesystem path of a bundled dataset CSV."""
    if name not in BUNDLED:
        raise ValueError(f"unknown bundled dataset {name!r}; have {BUNDLED}")
    with resources.as_file(resources.files(__package__) / f"{name}.csv") as p:
        return Path(p)
