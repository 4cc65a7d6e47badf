from sketchridge.utils.formats import grid_point, human_join, plural


def test_plural():
    assert f"{plural(1):replication}" == "1 replication"
    assert f"{plural(3):replication}" == "3 replications"
    assert f"{plural(2):matrix|matrices}" == "2 matrices"
    assert f"{plural(0):file}" == "0 files"


def test_human_join():
    assert human_join([]) == ""
    assert human_join(["fixed"]) == "fixed"
    assert human_join(["full", "closed"]) == "full and closed"
    assert human_join(["full", "closed", "grid"]) == "full, closed and grid"


def test_grid_point():
    assert grid_point(0.5, 1 / 3) == "phi=0.5, psi=0.3333"
