import math
from pathlib import Path

import numpy as np
import pytest

import foxh

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


def ggbm(beta=0.75, hurst=0.375):
    return foxh.process(hurst, upper=[(1 - beta, beta)], lower=[(0, 1)],
                        decomposition=[{"type": "mwright", "beta": beta}])


def test_spec_constants_and_density():
    spec = foxh.Spec(upper=[], lower=[(0.0, 1.0)])
    assert spec.class_tag == "C1"
    assert spec.constants["K"] == pytest.approx(1.0)
    assert spec.density(1.0) == pytest.approx(math.exp(-1.0), rel=1e-12)
    lhs, rhs = spec.laplace_check(1.0)
    assert lhs == pytest.approx(0.5, rel=1e-10) and rhs == pytest.approx(0.5, rel=1e-10)


def test_mittag_leffler_chf():
    proc = ggbm(0.5, 0.5)
    assert proc.char_fn([1.0], [math.sqrt(2.0)]) == pytest.approx(math.e * math.erfc(1.0), rel=1e-10)


def test_invalid_spec_raises_with_kind():
    with pytest.raises(foxh.FoxhError) as info:
        foxh.Spec(upper=[], lower=[(0.0, -1.0)])
    assert info.value.kind == "NonPositiveWeight"


def test_simulate_shape_and_determinism():
    proc = ggbm()
    t, a = proc.simulate(1.0, 32, 50, seed=5)
    _, b = proc.simulate(1.0, 32, 50, seed=5, threads=2)
    assert t.shape == (33,) and a.shape == (50, 33)
    assert np.array_equal(a, b)
    assert np.all(a[:, 0] == 0.0)
    assert foxh.trajectory_csv(a, 1.0).startswith("t,path_0,path_1,")


def test_second_moment_and_msd():
    proc = foxh.Process.from_file(str(CONFIGS / "brownian.json"))
    _, paths = proc.simulate(1.0, 256, 4000, seed=11)
    m2 = np.mean(paths[:, -1] ** 2)
    assert abs(m2 - proc.moment(1.0, 2)) < 5 * np.std(paths[:, -1] ** 2) / math.sqrt(4000)
    report = foxh.msd(paths, 1.0, proc.hurst)
    assert report["classification"] == "normal"


def test_ks_and_kernel():
    rng = np.random.default_rng(0)
    _, p = foxh.ks_two_sample(rng.normal(size=2000), rng.normal(size=2000))
    assert p > 0.001
    assert foxh.kernel_inner_product(0.75, 1.0, 1.0) == pytest.approx(1.0, abs=1e-6)
    assert ggbm().berman()["finite"]
