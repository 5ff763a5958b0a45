"""Smoke test for the diffront Python extension.

Build and install with
    pip install --no-build-isolation -e crates/py
then run
    python3 python/smoke_test.py
"""

import math
import tempfile
from pathlib import Path

import diffront


def main() -> None:
    lam_c, lam_max = diffront.lambda_constants()
    assert math.isclose(lam_max / lam_c, math.exp(-1), rel_tol=1e-12)
    consts = diffront.constants()
    assert consts["floor_lambda_c_1e4"] == 3976

    kernel = diffront.WalkField(2)
    assert kernel.get(0, 0) == 1 / 6
    assert math.isclose(kernel.total(), 1.0, abs_tol=1e-14)

    n, t = 40_000, 10_000
    r_star = diffront.critical_radius(n, t)
    assert math.isclose(diffront.radial_profile(n, t, r_star), 0.5, abs_tol=1e-9)

    region = diffront.Region.disk(1.2 * r_star + 20)
    field = diffront.sample_poisson_field(n, t, region, seed=1)
    sample = field.on_region(region)
    front = sample.front()
    assert abs(front.winding) == 1
    stats = front.statistics(r_star)
    print(f"front: L = {stats['length']}, mean radius {stats['mean_radius']:.1f} vs r* {r_star:.1f}")

    rhombus = diffront.Region.parallelogram(0, 30, 0, 30)
    perc = diffront.PercolationSample.bernoulli(rhombus, 0.5, 7)
    occ = perc.has_crossing(0, 30, 0, 30, "horizontal", "occupied")
    vac = perc.has_crossing(0, 30, 0, 30, "vertical", "vacant")
    assert occ != vac

    (particles,) = diffront.simulate_particles(1000, [50], 3)
    assert particles.total() == 1000
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "field.grid"
        particles.save(path)
        assert diffront.OccupancyField.load(path).counts() == particles.counts()
        written = diffront.run_experiment(
            'experiment = "strip"\nstrip_height = 32\nell = 20\nreplicas = 2\n', out=tmp
        )
        assert any(str(p).endswith("strip.csv") for p in written)

    print("smoke test passed")


if __name__ == "__main__":
    main()
