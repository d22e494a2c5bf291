import numpy as np
import pytest
from scipy.optimize import root

from diamondstab.integrator import (
    MeshParams,
    MeshState,
    NewtonError,
    gauss_tableau,
    init_half_step,
    integrate,
    random_tangent_pair,
    solve_diamond_rk,
    solve_diamond_simple,
    solve_diamonds,
    total_energy,
    verify_discrete_conservation,
)
from diamondstab.msform import eval_grad_S, linearize, registry_get
from diamondstab.solutions import (
    dirac_breather,
    linear_kg_plane_wave,
    mixed_kg_cosine,
    nls_two_soliton_ic,
)
from diamondstab.spectral import build_blocks_simple


def test_gauss_tableau_r1_exact():
    t = gauss_tableau(1)
    np.testing.assert_allclose(t.A, [[0.5]], atol=1e-15)
    np.testing.assert_allclose(t.b, [1.0], atol=1e-15)
    np.testing.assert_allclose(t.c, [0.5], atol=1e-15)


def test_gauss_tableau_r2_exact():
    t = gauss_tableau(2)
    s3 = np.sqrt(3.0)
    np.testing.assert_allclose(t.c, [0.5 - s3 / 6, 0.5 + s3 / 6], atol=1e-14)
    np.testing.assert_allclose(t.A, [[0.25, 0.25 - s3 / 6], [0.25 + s3 / 6, 0.25]], atol=1e-14)
    np.testing.assert_allclose(t.b, [0.5, 0.5], atol=1e-14)


def test_gauss_tableau_range():
    with pytest.raises(ValueError):
        gauss_tableau(5)
    with pytest.raises(ValueError):
        gauss_tableau(0)


def test_mesh_params_validation():
    with pytest.raises(ValueError):
        MeshParams(a=0.0, b=1.0, N=1, dt=0.1, T=1.0)
    with pytest.raises(ValueError):
        MeshParams(a=0.0, b=1.0, N=4, dt=-0.1, T=1.0)
    with pytest.raises(ValueError):
        MeshParams(a=1.0, b=0.0, N=4, dt=0.1, T=1.0)


@pytest.mark.parametrize("name", ["wave", "linear_kg"])
def test_linear_diamond_equals_block_map(name):
    form = registry_get(name)
    lin = linearize(form, np.zeros(form.d))
    bl = build_blocks_simple(lin, 0.05, 0.1)
    rng = np.random.default_rng(1)
    for _ in range(20):
        zb, zl, zr = rng.standard_normal((3, form.d))
        zt = solve_diamond_simple(form, zb, zl, zr, 0.05, 0.1)
        np.testing.assert_allclose(zt, bl.B @ zb + bl.Am @ zl + bl.Ap @ zr, atol=1e-12)


def test_zero_inputs_zero_output():
    for name in ("wave", "dirac", "nls", "good_boussinesq"):
        form = registry_get(name)
        z = np.zeros(form.d)
        np.testing.assert_array_equal(solve_diamond_simple(form, z, z, z, 0.1, 0.1), z)


@pytest.mark.parametrize("name", ["dirac", "good_boussinesq"])
def test_nonlinear_diamond_against_dense_root_finder(name):
    form = registry_get(name)
    K, L = form.K, form.L
    dt = dx = 0.1
    rng = np.random.default_rng(9)
    for _ in range(25):
        zb, zl, zr = 0.3 * rng.standard_normal((3, form.d))
        zt = solve_diamond_simple(form, zb, zl, zr, dt, dx)

        def residual(z):
            avg = 0.25 * (z + zb + zl + zr)
            return K @ (z - zb) / dt + L @ (zr - zl) / dx - eval_grad_S(form, avg)

        ref = root(residual, zb, method="hybr", tol=1e-13)
        assert np.abs(residual(ref.x)).max() < 1e-9  # oracle converged
        np.testing.assert_allclose(zt, ref.x, atol=1e-10)


def test_batch_solve_matches_per_diamond_loop():
    # diamond updates within a half-step are independent; batch and loop agree
    form = registry_get("dirac")
    rng = np.random.default_rng(12)
    Zb, Zl, Zr = 0.2 * rng.standard_normal((3, 7, 4))
    batch = solve_diamonds(form, Zb, Zl, Zr, 0.1, 0.2)
    for order in (range(7), reversed(range(7))):
        for i in order:
            one = solve_diamond_simple(form, Zb[i], Zl[i], Zr[i], 0.1, 0.2)
            assert np.abs(one - batch[i]).max() <= 1e-14


def test_init_half_step_exact_mixed_kg():
    form = registry_get("mixed_kg")
    ic, exact = mixed_kg_cosine(form.param("a"))
    mesh = MeshParams(a=-1.0, b=1.0, N=8, dt=0.01, T=0.1)
    state = init_half_step(form, ic, mesh, exact=exact)
    xh = mesh.x_half()
    np.testing.assert_allclose(
        state.half_points()[:, 0], np.cos(np.pi * (xh + mesh.dt / 2)), atol=1e-14
    )


def test_init_half_step_box_constant():
    # constant state with grad S = 0 is a fixed point of the box step
    form = registry_get("wave")
    const = np.array([0.7, 0.0, 0.0])  # grad S = (0, v, -w) = 0
    mesh = MeshParams(a=0.0, b=1.0, N=10, dt=0.05, T=0.1)
    state = init_half_step(form, lambda x: const, mesh, method="box")
    np.testing.assert_allclose(state.half_points(), np.tile(const, (10, 1)), atol=1e-12)


def test_init_half_step_breather_exact():
    form = registry_get("dirac")
    ic, exact = dirac_breather(form.param("m"), form.param("lam"))
    mesh = MeshParams(a=-24.0, b=24.0, N=32, dt=0.2, T=1.0)
    state = init_half_step(form, ic, mesh, exact=exact)
    np.testing.assert_allclose(
        state.half_points(), exact(mesh.x_half(), mesh.dt / 2), atol=1e-14
    )


def test_integrate_zero_ic_stays_zero():
    form = registry_get("nls")
    mesh = MeshParams(a=0.0, b=2.0, N=8, dt=0.05, T=0.5)
    res = integrate(form, "simple", lambda x: np.zeros(4), mesh, observers=(), init_method="box")
    assert res.status == "completed"
    assert np.abs(res.state.values).max() == 0.0


def test_integrate_divergence_is_status_not_error():
    # mixed-derivative KG is unconditionally unstable: blow-up expected
    form = registry_get("mixed_kg")
    ic, exact = mixed_kg_cosine(form.param("a"))
    mesh = MeshParams(a=-1.0, b=1.0, N=40, dt=1e-3, T=1.0)
    res = integrate(form, "simple", ic, mesh, observers=(), exact=exact, blowup=1e8)
    assert res.status == "diverged"
    assert res.diverged_at is not None


def test_wave_energy_constant_field():
    form = registry_get("wave")
    mesh = MeshParams(a=0.0, b=1.0, N=10, dt=0.1, T=1.0)
    values = np.zeros((20, 3))
    values[:, 1] = 1.0  # v == 1, w == 0
    assert total_energy(form, MeshState(values), mesh) == pytest.approx(0.5)


def test_energy_unregistered_form_raises():
    from diamondstab.msform import MultiSymplecticForm
    form = MultiSymplecticForm("anon", ("a", "b"), np.zeros((2, 2)), np.zeros((2, 2)), np.eye(2))
    mesh = MeshParams(a=0.0, b=1.0, N=4, dt=0.1, T=0.1)
    with pytest.raises(ValueError, match="energy"):
        total_energy(form, MeshState(np.zeros((8, 2))), mesh)


def test_convergence_order_simple_and_rk1():
    # error in the physical solution u under dx halving at fixed dt/dx;
    # the auxiliary derivative fields are one order lower at vertices
    form = registry_get("linear_kg")
    ic, exact = linear_kg_plane_wave()
    L = 2 * np.pi
    for scheme in ("simple", "rk:1"):
        errs = []
        for N in (16, 32, 64):
            dx = L / N
            dt = 0.5 * dx
            mesh = MeshParams(a=0.0, b=L, N=N, dt=dt, T=(N // 2) * dt)
            res = integrate(form, scheme, ic, mesh, observers=(), exact=exact)
            tend = mesh.nt * mesh.dt
            if scheme == "simple":
                u = res.state.integer_points()[:, 0]
                uex = exact(mesh.x_int(), tend)[:, 0]
                errs.append(np.abs(u - uex).max())
            else:
                tab = gauss_tableau(1)
                xi = mesh.x_int()
                worst = 0.0
                for i in range(N):
                    c = tab.c[0]
                    ref = exact(xi[i] + 0.5 * dx * c, tend + 0.5 * dt * c)
                    worst = max(worst, abs(res.edge_state[2 * i, 0, 0] - ref.reshape(-1)[0]))
                errs.append(worst)
        order = np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])
        assert min(order) >= 1.9, (scheme, errs)


def test_rk_diamond_against_dense_stage_solve():
    # independent oracle: assemble the r=1 collocation equations directly
    form = registry_get("wave")
    t1 = gauss_tableau(1)
    dt, dx = 0.2, 0.1
    rng = np.random.default_rng(21)
    zl = rng.standard_normal(3)
    zb = rng.standard_normal(3)
    Ktil = form.K / dt - form.L / dx
    Ltil = form.K / dt + form.L / dx
    P = form.P
    # single stage Z: P Z = Ktil * 2 (Z - zb) + Ltil * 2 (Z - zl)
    A = P - 2.0 * Ktil - 2.0 * Ltil
    rhs = -2.0 * Ktil @ zb - 2.0 * Ltil @ zl
    Z = np.linalg.solve(A, rhs)
    zt_ref = 2.0 * Z - zb
    zr_ref = 2.0 * Z - zl
    zt, zr = solve_diamond_rk(form, t1, zb[None, :], zl[None, :], dt, dx)
    np.testing.assert_allclose(zt.reshape(-1), zt_ref, atol=1e-12)
    np.testing.assert_allclose(zr.reshape(-1), zr_ref, atol=1e-12)


def test_rk_zero_inputs_zero_outputs():
    form = registry_get("dirac")
    t2 = gauss_tableau(2)
    z = np.zeros((2, 4))
    zt, zr = solve_diamond_rk(form, t2, z, z, 0.1, 0.1)
    assert np.abs(zt).max() == 0.0 and np.abs(zr).max() == 0.0


def test_rk_integrate_box_fallback_zero_ic():
    # no exact solution supplied: edges come from the box half-step fallback
    form = registry_get("nls")
    mesh = MeshParams(a=0.0, b=2.0, N=8, dt=0.01, T=0.05)
    res = integrate(form, "rk:1", lambda x: np.zeros(4), mesh, observers=())
    assert res.status == "completed"
    assert np.abs(res.edge_state).max() == 0.0


def test_rk_singular_stage_matrix_raises():
    form = registry_get("kdv")
    t2 = gauss_tableau(2)
    with pytest.raises(NewtonError, match="singular"):
        solve_diamond_rk(form, t2, np.zeros((2, 4)), np.zeros((2, 4)), 0.1, 0.1)


def test_discrete_conservation_random_pairs():
    rng = np.random.default_rng(31)
    for name in ("wave", "linear_kg", "dirac"):
        form = registry_get(name)
        lin = linearize(form, np.zeros(form.d))
        for _ in range(100):
            pair = random_tangent_pair(lin, 0.01, 0.1, rng)
            assert abs(verify_discrete_conservation(lin, 0.01, 0.1, pair)) <= 1e-10


def test_discrete_conservation_identical_tangent_is_exactly_zero():
    rng = np.random.default_rng(33)
    lin = linearize(registry_get("wave"), np.zeros(3))
    xi, _ = random_tangent_pair(lin, 0.01, 0.1, rng)
    assert verify_discrete_conservation(lin, 0.01, 0.1, (xi, xi)) == 0.0


def test_conservation_rejects_bad_tangent():
    rng = np.random.default_rng(34)
    lin = linearize(registry_get("wave"), np.zeros(3))
    xi, eta = random_tangent_pair(lin, 0.01, 0.1, rng)
    xi = dict(xi)
    xi["t"] = xi["t"] + 1.0
    with pytest.raises(ValueError, match="tangent"):
        verify_discrete_conservation(lin, 0.01, 0.1, (xi, eta))


def test_dirac_short_run_energy():
    form = registry_get("dirac")
    ic, exact = dirac_breather(form.param("m"), form.param("lam"))
    mesh = MeshParams(a=-24.0, b=24.0, N=160, dt=0.2, T=2.0)
    res = integrate(form, "simple", ic, mesh, observers=("energy",), exact=exact)
    assert res.status == "completed"
    drift = np.abs(res.energies - res.energies[0]).max() / abs(res.energies[0])
    assert drift <= 1e-2


def test_nls_two_soliton_ic_derivative_consistency():
    ic = nls_two_soliton_ic()
    xs = np.linspace(-15.0, 15.0, 11)
    h = 1e-6
    z = ic(xs)
    dp = (ic(xs + h)[:, 0] - ic(xs - h)[:, 0]) / (2 * h)
    dq = (ic(xs + h)[:, 1] - ic(xs - h)[:, 1]) / (2 * h)
    np.testing.assert_allclose(z[:, 2], dp, atol=1e-6)
    np.testing.assert_allclose(z[:, 3], dq, atol=1e-6)
