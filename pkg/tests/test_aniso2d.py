import numpy as np
import pytest

from anisolab.aniso2d import (
    AnisoFn2D,
    BoxTooSmallError,
    GridSpec2D,
    SampledFn2D,
    biconjugate2d,
    check_monotonicity_property,
    conjugate2d,
    eval2d,
    eval2d_log,
    grad2d,
    intro_exp_fn,
    involution_error,
    power_sum_fn,
    quadratic_fn,
    radial_power_fn,
    trudinger_fn,
    verify_young_inequality,
)
from anisolab.numerics import RangeError
from anisolab.young1d import PowerFn


def test_intro_exp_reference_values():
    phi = intro_exp_fn()
    assert eval2d(phi, (2.0, 0.0)) == pytest.approx(4.0 * (1.0 + np.e**2), rel=1e-14)
    assert eval2d(phi, (3.0, 3.0)) == pytest.approx(18.0, rel=1e-14)
    assert eval2d(phi, (0.0, 0.0)) == 0.0


def test_monotonicity_violation_flagged():
    phi = intro_exp_fn()
    v = check_monotonicity_property(phi, [((2.0, 0.0), (3.0, 3.0))])
    assert len(v) == 1 and v[0][2] > v[0][3]


def test_power_sum_has_no_violations(rng):
    phi = power_sum_fn(2, 3)
    pairs = []
    for _ in range(200):
        eta = rng.uniform(-3, 3, 2)
        xi = eta * rng.uniform(0, 1, 2)
        pairs.append((xi, eta))
    assert check_monotonicity_property(phi, pairs) == []


def test_constructed_triple_not_componentwise_monotone(build6):
    from anisolab.aniso2d import constructed_triple_fn

    phi = constructed_triple_fn(build6)
    # at a point where phi_1 rides the power curve and phi_3 the upper curve
    # the pair (0, x) vs (x, x) violates componentwise monotonicity
    for rec in build6.schedule[1:]:
        x = float(np.exp(rec.logt_next)) * 0.999
        if x > 1e300:
            continue
        if phi.value(0.0, x) > phi.value(x, x):
            break
    else:
        pytest.fail("no violation found on schedule points")


def test_eval_overflow_flagged():
    phi = intro_exp_fn()
    with pytest.raises(RangeError):
        eval2d(phi, (0.0, 2000.0))
    assert np.isfinite(eval2d_log(phi, 0.0, 1.0, np.log(2000.0)))


def test_grad_quadratic_identity():
    assert np.allclose(grad2d(quadratic_fn(), (1.0, 2.0)), [1.0, 2.0])
    assert np.allclose(grad2d(quadratic_fn(), (0.0, 0.0)), [0.0, 0.0])


def test_grad_power_sum():
    assert np.allclose(grad2d(power_sum_fn(4, 2), (1.0, 1.0)), [4.0, 2.0])


def test_grad_is_subgradient(rng, build6):
    from anisolab.aniso2d import constructed_triple_fn

    for phi in (quadratic_fn(), power_sum_fn(2, 4), constructed_triple_fn(build6)):
        xi = rng.uniform(-4, 4, (200, 2))
        eta = rng.uniform(-4, 4, (200, 2))
        f_xi = phi.value(xi[:, 0], xi[:, 1])
        f_eta = phi.value(eta[:, 0], eta[:, 1])
        gx, gy = phi.grad(xi[:, 0], xi[:, 1])
        lin = gx * (eta[:, 0] - xi[:, 0]) + gy * (eta[:, 1] - xi[:, 1])
        scale = np.maximum(1.0, np.abs(f_eta))
        assert np.all(f_eta >= f_xi + lin - 1e-9 * scale)


def test_evenness_exact(rng):
    phi = trudinger_fn()
    pts = rng.uniform(-5, 5, (100, 2))
    assert np.array_equal(
        phi.value(pts[:, 0], pts[:, 1]), phi.value(-pts[:, 0], -pts[:, 1])
    )


def test_segment_convexity(rng):
    phi = intro_exp_fn()
    a = rng.uniform(-3, 3, (1000, 2))
    b = rng.uniform(-3, 3, (1000, 2))
    mid = 0.5 * (a + b)
    fmid = phi.value(mid[:, 0], mid[:, 1])
    favg = 0.5 * (phi.value(a[:, 0], a[:, 1]) + phi.value(b[:, 0], b[:, 1]))
    scale = np.maximum(1.0, favg)
    assert np.all(fmid <= favg + 1e-9 * scale)


def test_directions_must_span():
    with pytest.raises(ValueError):
        AnisoFn2D([(1.0, 0.0, PowerFn(2)), (2.0, 0.0, PowerFn(2))])


def test_conjugate_quadratic_analytic():
    spec = GridSpec2D.square(4.0, 129)
    star = conjugate2d(quadratic_fn(), spec)
    X, Y = np.meshgrid(star.x, star.y, indexing="ij")
    ref = 0.5 * (X**2 + Y**2)
    assert np.max(np.abs(star.values - ref)) / np.max(ref) <= 0.01
    assert star.values[64, 64] == 0.0  # conjugate vanishes at the origin


def test_conjugate_power_analytic():
    spec = GridSpec2D.square(4.0, 129)
    star = conjugate2d(radial_power_fn(3.0, 1.0 / 3.0), spec)
    X, Y = np.meshgrid(star.x, star.y, indexing="ij")
    ref = np.hypot(X, Y) ** 1.5 / 1.5
    assert np.max(np.abs(star.values - ref)) / np.max(ref) <= 0.01


def test_conjugate_box_autoexpansion():
    spec = GridSpec2D.square(4.0, 65)
    tight = GridSpec2D.square(1.0, 65)
    star = conjugate2d(quadratic_fn(), spec, primal_spec=tight)
    X, Y = np.meshgrid(star.x, star.y, indexing="ij")
    ref = 0.5 * (X**2 + Y**2)
    assert np.max(np.abs(star.values - ref)) / np.max(ref) <= 0.02


def test_conjugate_box_too_small():
    spec = GridSpec2D.square(4.0, 65)
    tight = GridSpec2D.square(0.5, 65)
    with pytest.raises(BoxTooSmallError):
        conjugate2d(quadratic_fn(), spec, primal_spec=tight, max_expand=0)


def test_young_inequality_analytic_pairs(rng):
    phi = quadratic_fn()
    xi = rng.uniform(-3, 3, (10_000, 2))
    eta = rng.uniform(-3, 3, (10_000, 2))
    slack = verify_young_inequality(phi, quadratic_fn(), xi, eta)
    assert slack <= 1e-6
    # Fenchel equality at gradient pairs
    eq = verify_young_inequality(phi, quadratic_fn(), np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]]))
    assert eq == pytest.approx(0.0, abs=1e-15)
    zero = verify_young_inequality(
        phi, quadratic_fn(), np.array([[0.0, 0.0]]), np.array([[0.0, 0.0]])
    )
    assert zero == 0.0


def test_young_inequality_sampled_conjugate(rng):
    spec = GridSpec2D.square(4.0, 129)
    phi = power_sum_fn(2, 4)
    star = conjugate2d(phi, spec)
    ii = rng.integers(0, 129, 3000)
    jj = rng.integers(0, 129, 3000)
    pi = rng.integers(0, 129, 3000)
    pj = rng.integers(0, 129, 3000)
    xi = np.stack([spec.x[pi], spec.x[pj]], axis=-1)
    slack = verify_young_inequality(phi, star, xi, (ii, jj))
    assert slack <= 1e-12


def test_involution_and_minorant():
    spec = GridSpec2D.square(4.0, 129)
    for phi in (quadratic_fn(), power_sum_fn(2, 4)):
        err = involution_error(phi, spec)
        assert err <= 0.02
        back, _ = biconjugate2d(phi, spec)
        X, Y = np.meshgrid(spec.x, spec.y, indexing="ij")
        ref = phi.value(X, Y)
        # the discrete transform is a minorant up to the first transform's
        # own discretization error (grid tolerance)
        scale = float(np.max(np.abs(ref)))
        assert np.all(back.values <= ref + 0.01 * scale)
        assert abs(back.values[64, 64]) <= 1e-12


def test_sampled_roundtrips(tmp_path):
    spec = GridSpec2D.square(2.0, 33)
    X, Y = np.meshgrid(spec.x, spec.y, indexing="ij")
    s = SampledFn2D.from_spec(spec, X**2 + Y**2)
    p = tmp_path / "f.bin"
    s.to_binary(p)
    back = SampledFn2D.from_binary(p)
    assert np.array_equal(back.values, s.values)
    assert back.x0 == s.x0 and back.hx == s.hx
    c = tmp_path / "f.csv"
    s.to_csv(c)
    lines = c.read_text().strip().split("\n")
    assert lines[0] == "x,y,value"
    assert len(lines) == 1 + 33 * 33
