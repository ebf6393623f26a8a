import numpy as np
import pytest

from kolmogorov_fk.rng import STREAM_BOOTSTRAP, STREAM_PATHS, derive_seed, standard_normals


def test_derive_seed_deterministic_and_distinct():
    a = derive_seed(1, 0)
    assert a == derive_seed(1, 0)
    assert len({derive_seed(1, k) for k in range(1000)}) == 1000
    assert derive_seed(1, "alpha") != derive_seed(1, "beta")
    assert derive_seed(1, 5) != derive_seed(2, 5)
    assert 0 <= a < 2**64


def test_normals_depend_only_on_path_id():
    full = standard_normals(3, np.arange(10, dtype=np.uint64), 7, 2)
    part = standard_normals(3, np.array([4, 9], dtype=np.uint64), 7, 2)
    assert np.array_equal(full[[4, 9]], part)


def test_streams_are_independent():
    ids = np.arange(5, dtype=np.uint64)
    assert not np.array_equal(standard_normals(3, ids, 4, 1, STREAM_PATHS), standard_normals(3, ids, 4, 1, STREAM_BOOTSTRAP))


@pytest.mark.parametrize("m", [1, 2, 3])
def test_normal_moments(m):
    z = standard_normals(99, np.arange(4000, dtype=np.uint64), 25, m).reshape(-1)
    se = 1 / np.sqrt(z.size)
    assert abs(z.mean()) < 4 * se
    assert abs(z.var() - 1) < 4 * np.sqrt(2) * se
    assert abs(np.mean(z**4) - 3) < 0.05


def test_normals_uncorrelated_across_steps():
    z = standard_normals(5, np.arange(20000, dtype=np.uint64), 2, 1)[:, :, 0]
    assert abs(np.corrcoef(z[:, 0], z[:, 1])[0, 1]) < 0.03
