"""Smoke test for the dtsync Python bindings.

Build first:  pip install --no-build-isolation -e crates/py
Run:          python python/smoke_test.py
"""

import math
import tempfile
from pathlib import Path

import dtsync_py as dt


def main() -> None:
    spec = dt.MdpSpec(4, 0.8, 0.3, update_cost=12.0, weight=1.0)
    assert spec.num_states == 16
    rpi = dt.solve(spec)
    rvi = dt.solve_rvi(spec)
    assert abs(rpi.gain - rvi.gain) < 1e-9, (rpi.gain, rvi.gain)
    assert rpi.bias(1, 1) == 0.0
    assert rpi.is_monotone()
    assert abs(dt.average_cost(spec, rpi) - rpi.gain) < 1e-9

    # Certain, always-changing, free updates: AoCI stays at 1.
    free = dt.MdpSpec(5, 1.0, 1.0, update_cost=0.0)
    assert abs(dt.solve(free).gain - 1.0) < 1e-12

    big = dt.MdpSpec(100, 0.8, 0.3)
    solved = dt.solve(big)
    m = dt.simulate(big, solved, runs=200, horizon=1000, seed=3, burn_in=200)
    assert abs(m.total_cost - solved.gain) < 4 * m.std_error, (m.total_cost, solved.gain, m.std_error)
    zw = dt.simulate(big, "ZW", runs=50, horizon=500)
    assert zw.update_rate == 1.0
    assert math.isclose(zw.avg_update_cost, 12.0)

    nearest, random_mean, oracle = dt.deploy_baselines(0, num_devices=6, num_bs=4)
    assert oracle is not None and oracle <= nearest and oracle <= random_mean
    assert dt.deploy_baselines(0, num_devices=20, num_bs=6)[2] is None

    text = dt.validate_config("[chain]\nq = 0.4\n", ["seed=5"])
    assert "seed = 5" in text
    try:
        dt.validate_config("[chain]\nq = 4.0\n")
    except ValueError as e:
        assert "chain.q" in str(e)
    else:
        raise AssertionError("invalid q accepted")

    with tempfile.TemporaryDirectory() as tmp:
        paths = dt.run_command("solve", tmp, "[mdp]\naoci_cap = 6\naoi_cap = 6\n")
        assert [Path(p).name for p in paths] == ["policy.csv", "solve.csv"]
        assert Path(paths[0]).read_text().startswith("# dtsync version=")

    print("python smoke test passed: gain", round(rpi.gain, 6))


if __name__ == "__main__":
    main()
