import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bezseg.annotations import AnnotationSet, LineAnnotation
from bezseg.cameras import FisheyeCamera, SphericalCamera


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def fisheye():
    """Moderate barrel-distortion config used across the suite."""
    return FisheyeCamera(400.0, 400.0, 256.0, 256.0, k=(0.03, -0.006, 0.001, 0.0))


@pytest.fixture
def sphere_grid():
    return SphericalCamera(1024, 512)


def make_annotation(rng, width=512, height=512, n_junctions=8, n_lines=6, order=1,
                    margin=16.0):
    """Random annotation set with junctions and equipartition lines in bounds."""
    junctions = rng.uniform(margin, [width - margin, height - margin], size=(n_junctions, 2))
    lines = []
    for _ in range(n_lines):
        pts = rng.uniform(margin, [width - margin, height - margin], size=(order + 1, 2))
        lines.append(LineAnnotation(pts))
    return AnnotationSet(width, height, junctions, lines)


@pytest.fixture
def annotation_factory():
    return make_annotation
