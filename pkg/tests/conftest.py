import time

import numpy as np
import pytest

from actionstyle.synth import StyleParams, generate_sequence, make_camera_ring


@pytest.fixture(scope="session")
def ring():
    return make_camera_ring(5, seed=0)


@pytest.fixture(scope="session")
def walk(ring):
    """One noiseless walk seen by all five ring cameras."""
    return generate_sequence("walk", StyleParams(), 60, seed=11, cameras=ring)


def random_camera(rng, target=(0.0, 0.0, 0.0)):
    """A finite camera on a sphere of radius 4-8 looking near `target`."""
    from actionstyle.geometry import CameraModel
    from actionstyle.synth import look_at

    d = rng.normal(size=3)
    d /= np.linalg.norm(d)
    center = np.asarray(target) + rng.uniform(4, 8) * d
    aim = np.asarray(target) + rng.normal(scale=0.2, size=3)
    up = (0.0, 0.0, 1.0) if abs(d[2]) < 0.9 else (1.0, 0.0, 0.0)
    R = look_at(center, aim, up)
    f = rng.uniform(600, 1400)
    K = np.array([[f, rng.uniform(-2, 2), rng.uniform(300, 700)],
                  [0, f * rng.uniform(0.9, 1.1), rng.uniform(300, 700)],
                  [0, 0, 1]])
    return CameraModel.from_parameters(K, R, center)


def true_fundamental(cam1, cam2):
    """F with x2^T F x1 = 0 from the projection matrices: [e2]x P2 P1^+."""
    from actionstyle.geometry import skew

    P1, P2 = cam1.projection, cam2.projection
    c1 = np.append(cam1.center, 1.0)
    e2 = P2 @ c1
    f = skew(e2) @ P2 @ np.linalg.pinv(P1)
    return f / np.linalg.norm(f)



@pytest.fixture(scope="session")
def default_study(tmp_path_factory):
    """Two complete default `eval` runs with the same seed: [(out_dir, seconds), ...]."""
    from actionstyle.cli import main

    runs = []
    for name in ("run1", "run2"):
        out = tmp_path_factory.mktemp(name)
        t0 = time.perf_counter()
        assert main(["eval", "--out", str(out)]) == 0
        runs.append((out, time.perf_counter() - t0))
    return runs


# --- acceptance report ---------------------------------------------------------

_CRITERIA = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion; printed in the summary."""
    def report(number, name, ok, detail):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
        _CRITERIA.append((number, line))
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA, key=lambda t: t[0]):
            terminalreporter.write_line(line)
