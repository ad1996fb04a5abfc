from pathlib import Path

import numpy as np
import pytest

from nisynth import StateSpace

REPO = Path(__file__).resolve().parent.parent
SAMPLES = REPO / "sample_systems"


@pytest.fixture(scope="session")
def demo_plant():
    """4-state, 2-in/2-out plant used throughout the worked demo."""
    return StateSpace(
        A=np.array([[-1.0, 0, 1, 1], [1, -1, 0, 1], [1, -1, 1, 0],
                    [0, 1, -1, 1]]),
        B=np.array([[0.0, 0], [1, 0], [1, 0], [1, 1]]),
        C=np.array([[0.0, 1, 0, 0], [0, 0, 1, 0]]),
        name="demo-plant")


@pytest.fixture(scope="session")
def demo_transforms():
    """The pinned output/state/input transforms for the demo plant."""
    return {
        "T_y": np.array([[1.0, 0], [-1, 1]]),
        "T_x": np.array([[1.0, 0, 0, 0], [0, 1, 0, 0], [0, -1, 1, 0],
                         [0, 0, 1, -1]]),
        "T_u": np.array([[1.0, 0], [0, -1]]),
    }


@pytest.fixture(scope="session")
def demo_uncertainty():
    """SNI uncertainty sample 0.5/(s+1) * I2."""
    return StateSpace(A=-np.eye(2), B=np.eye(2), C=0.5 * np.eye(2),
                      name="demo-uncertainty")


@pytest.fixture(scope="session")
def sample_paths():
    return {
        "plant": SAMPLES / "demo_plant.json",
        "uncertainty": SAMPLES / "demo_uncertainty.json",
        "params": SAMPLES / "demo_params.json",
    }
