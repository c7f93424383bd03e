import numpy as np
import pytest

from thermofit import sensors as S
from thermofit.mesh import generate_rect_grid
from thermofit.objective import CostBreakdown, cost_from_samples


def simple_sensor_set(omega_disp=1e4, omega_temp=None, weights=(1.0, 1.0)):
    mesh = generate_rect_grid(2, 1, 2.0, 1.0)
    disp = [(0.5, 0.5)]
    temp = [(1.5, 0.5)] if omega_temp is not None else []
    ss = S.make_sensor_set(mesh, disp, temp, response_weights=weights)
    return ss.with_weights(omega_disp, omega_temp)


def test_zero_mismatch_zero_cost():
    ss = simple_sensor_set(omega_temp=1.0)
    meas = S.Measurements(u_meas=np.array([[0.01, 0.02]]), dt_meas=np.array([5.0]))
    br = cost_from_samples(ss, meas, np.array([[0.01, 0.02]]), np.array([5.0]))
    assert br.j_total == 0.0
    assert br.j_disp == 0.0
    assert br.j_temp == 0.0


def test_single_sensor_arithmetic():
    # J_D = 1/2 * 1e4 * 0.01^2 = 0.5
    ss = simple_sensor_set(omega_disp=1e4)
    meas = S.Measurements(u_meas=np.array([[0.0, 0.0]]), dt_meas=np.empty(0))
    br = cost_from_samples(ss, meas, np.array([[0.01, 0.0]]), np.empty(0))
    assert br.j_disp == pytest.approx(0.5, rel=1e-14)
    assert br.j_temp == 0.0


def test_max_weight_normalization_collapses_to_half():
    # single sensor per channel, computed value 0: J_D = Omega1/2, J_T = Omega2/2
    meas = S.Measurements(u_meas=np.array([[0.02, 0.0]]), dt_meas=np.array([25.0]))
    omega_d, omega_t = S.max_value_weights(meas)
    ss = simple_sensor_set(omega_d, omega_t, weights=(1.0, 2.0))
    br = cost_from_samples(ss, meas, np.zeros((1, 2)), np.zeros(1))
    assert br.j_disp == pytest.approx(0.5, rel=1e-12)
    assert br.j_temp == pytest.approx(1.0, rel=1e-12)  # Omega2/2 = 1


def test_total_is_sum_of_terms():
    ss = simple_sensor_set(omega_disp=2.0, omega_temp=3.0)
    meas = S.Measurements(u_meas=np.array([[0.1, -0.2]]), dt_meas=np.array([4.0]))
    br = cost_from_samples(ss, meas, np.array([[0.3, 0.1]]), np.array([1.0]))
    assert br.j_total == pytest.approx(br.j_disp + br.j_temp, rel=1e-14)
    assert br.j_disp > 0 and br.j_temp > 0


def test_quadratic_scaling_of_mismatch():
    ss = simple_sensor_set(omega_disp=7.0, omega_temp=0.5)
    meas = S.Measurements(u_meas=np.zeros((1, 2)), dt_meas=np.zeros(1))
    u1, t1 = np.array([[0.1, 0.2]]), np.array([3.0])
    br1 = cost_from_samples(ss, meas, u1, t1)
    br3 = cost_from_samples(ss, meas, 3.0 * u1, 3.0 * t1)
    assert br3.j_disp == pytest.approx(9.0 * br1.j_disp, rel=1e-12)
    assert br3.j_temp == pytest.approx(9.0 * br1.j_temp, rel=1e-12)


def test_channel_scale_invariance_with_max_weights():
    # scaling measurements and computed values together leaves the
    # normalized cost unchanged
    rng = np.random.default_rng(3)
    u_meas = rng.normal(scale=0.01, size=(4, 2))
    u_comp = u_meas + rng.normal(scale=0.001, size=(4, 2))
    mesh = generate_rect_grid(3, 2, 3.0, 2.0)
    pts = [(0.4, 0.5), (1.2, 1.1), (2.5, 0.3), (2.9, 1.9)]
    for c in (1.0, 17.0, 3e-4):
        meas = S.Measurements(u_meas=c * u_meas, dt_meas=np.empty(0))
        ss = S.make_sensor_set(mesh, pts, []).with_weights(
            S.max_value_weights(meas)[0], None
        )
        br = cost_from_samples(ss, meas, c * u_comp, np.empty(0))
        if c == 1.0:
            reference = br.j_disp
        else:
            assert br.j_disp == pytest.approx(reference, rel=1e-12)


def test_component_mask_excludes_unmeasured():
    mesh = generate_rect_grid(2, 1, 2.0, 1.0)
    ss = S.make_sensor_set(
        mesh, [(0.5, 0.5)], [], disp_components=[[True, False]]
    ).with_weights(1.0, None)
    meas = S.Measurements(u_meas=np.array([[0.1, 0.0]]), dt_meas=np.empty(0))
    br = cost_from_samples(ss, meas, np.array([[0.1, 99.0]]), np.empty(0))
    assert br.j_disp == 0.0


def test_negative_cost_rejected():
    with pytest.raises(ValueError):
        CostBreakdown(j_total=-1.0, j_disp=-1.0, j_temp=0.0)
