import numpy as np
import pytest
from hypothesis import given

from blochloc.core import (
    BlochVector,
    TimeGrid,
    UnphysicalStateError,
    bloch_from_density,
    density_from_bloch,
    purity,
)

from conftest import ball_vectors, unit_vectors


@pytest.mark.parametrize("b, expected", [
    ((0, 0, 1), [[1, 0], [0, 0]]),
    ((0, 0, 0), [[0.5, 0], [0, 0.5]]),
    ((1, 0, 0), [[0.5, 0.5], [0.5, 0.5]]),
])
def test_density_from_bloch(b, expected):
    rho = density_from_bloch(BlochVector(*b))
    np.testing.assert_array_equal(rho, np.array(expected, dtype=complex))
    assert np.trace(rho) == 1


def test_density_rejects_outside_ball():
    with pytest.raises(UnphysicalStateError):
        density_from_bloch((0, 0, 1.001))
    density_from_bloch((0, 0, 1 + 1e-10))  # inside the tolerance


@pytest.mark.parametrize("rho, expected", [
    ([[1, 0], [0, 0]], (0, 0, 1)),
    ([[0.5, 0], [0, 0.5]], (0, 0, 0)),
    ([[0.5, -0.5j], [0.5j, 0.5]], (0, 1, 0)),
])
def test_bloch_from_density(rho, expected):
    assert tuple(bloch_from_density(np.array(rho))) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("rho", [
    [[0.5, 0.1], [0.2, 0.5]],       # not Hermitian
    [[0.6, 0], [0, 0.6]],           # trace 1.2
])
def test_bloch_from_density_rejects(rho):
    with pytest.raises(UnphysicalStateError):
        bloch_from_density(np.array(rho, dtype=complex))


@pytest.mark.parametrize("b, p", [((0, 0, 1), 1), ((0, 0, 0), 0), ((0.6, 0, 0.8), 1.0)])
def test_purity(b, p):
    assert purity(BlochVector(*b)) == pytest.approx(p, abs=1e-15)


@given(ball_vectors())
def test_round_trip(b):
    back = bloch_from_density(density_from_bloch(b))
    np.testing.assert_allclose(tuple(back), b, atol=1e-12)


@given(unit_vectors())
def test_pure_states_have_zero_determinant(b):
    assert abs(np.linalg.det(density_from_bloch(b))) < 1e-12


@given(ball_vectors())
def test_density_is_a_state(b):
    rho = density_from_bloch(b)
    ev = np.linalg.eigvalsh(rho)
    assert np.allclose(rho, rho.conj().T)
    assert ev.min() > -1e-12 and ev.max() < 1 + 1e-12
    # det = (1 - |b|^2) / 4
    assert np.linalg.det(rho).real == pytest.approx((1 - purity(b)) / 4, abs=1e-12)


def test_time_grid():
    g = TimeGrid(0.01, 40_000)
    assert g.t_max == pytest.approx(400)
    assert len(g.times) == 40_001
    assert g.times[-1] == 400.0
    assert g.index_of(5.0) == 500
    assert TimeGrid.spanning(5.0, 1e-3).n_steps == 5000
    with pytest.raises(ValueError):
        TimeGrid(0.0, 10)
    with pytest.raises(ValueError):
        TimeGrid(0.1, 0)
