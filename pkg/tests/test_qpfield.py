import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qpwave import qpfield as qf
from qpwave.lattice import FrequencyVector, LatticeBox, box_cardinality
from qpwave.qpfield import CoefficientField, WeightSpec
from qpwave.symbols import builtin

from support import brute_convolution, random_field, random_omega, rng

W1 = FrequencyVector((1.0,))
W2 = FrequencyVector((1.0, math.sqrt(2.0)))


def delta(omega, n, value=1.0, real=False):
    return CoefficientField.from_entries(omega, {n: value}, real=real)


# norms


def test_norm_three_terms():
    u = CoefficientField.from_entries(W1, {(0,): 1.0, (1,): 0.5, (-1,): 0.5}, real=True)
    assert qf.norm_vk(u, 1.0) == pytest.approx(1 + math.e, rel=1e-15)


def test_norm_of_zero():
    assert qf.norm_vk(CoefficientField.zeros(W2, 3), 2.0) == 0.0


@pytest.mark.parametrize("nu, N, kappa", [(1, 8, 0.5), (2, 5, 0.7), (2, 8, 1.3)])
def test_norm_cancels_preset_decay(nu, N, kappa):
    omega = W1 if nu == 1 else W2
    u = CoefficientField.exponential_preset(omega, 1.0, kappa, N)
    assert qf.norm_vk(u, kappa) == pytest.approx(box_cardinality(N, nu), rel=1e-13)


def test_weighted_single_term():
    w = WeightSpec.closed_form(lambda m: 2 * (1 + m**2))
    assert qf.norm_weighted(delta(W1, (1,)), w) == pytest.approx(4.0)


def test_wiener_is_plain_l1():
    u = CoefficientField.from_entries(W1, {(0,): 3.0, (1,): 4j})
    assert qf.norm_weighted(u, WeightSpec.wiener()) == pytest.approx(7.0)


def test_exponential_weight_reproduces_norm_vk():
    g = rng(1)
    for _ in range(25):
        k = float(g.uniform(0.01, 2.0))
        u = random_field(g, W2, 5)
        a, b = qf.norm_weighted(u, WeightSpec.exponential(k)), qf.norm_vk(u, k)
        assert abs(a - b) <= 1e-14 * b


def test_sampled_weight_and_range():
    w = WeightSpec.from_samples([1.0] * 10)
    assert qf.norm_weighted(delta(W1, (3,), 2.0), w) == 2.0
    with pytest.raises(ValueError):
        w(np.array([10]))


@pytest.mark.parametrize(
    "func",
    [lambda m: np.exp(m.astype(float) ** 2 / 10.0), lambda m: 1.0 / (1.0 + m), lambda m: 0.0 * m],
    ids=["not-submultiplicative", "decreasing", "zero"],
)
def test_inadmissible_weights_rejected(func):
    with pytest.raises(ValueError):
        WeightSpec.closed_form(func)


# products


def test_delta_product():
    w = qf.multiply(delta(W1, (1,)), delta(W1, (1,)))
    assert w[(2,)] == 1.0
    assert dict(w.items()) == {(2,): 1.0}


def test_binomial_square_and_cube():
    u = CoefficientField.from_entries(W1, {(0,): 1.0, (1,): 1.0})
    sq = qf.multiply(u, u)
    assert [sq[(j,)] for j in range(3)] == [1, 2, 1]
    cube = qf.power(u, 3)
    assert [cube[(j,)] for j in range(4)] == [1, 3, 3, 1]


def test_power_one_is_identity():
    u = random_field(rng(2), W2, 3)
    assert qf.power(u, 1) is u
    with pytest.raises(ValueError):
        qf.power(u, 0)


def test_multiply_matches_dict_convolution():
    g = rng(3)
    for _ in range(20):
        omega = random_omega(g, 2)
        u, v = random_field(g, omega, 3, density=0.6), random_field(g, omega, 4, density=0.6)
        ref = brute_convolution(u, v)
        w = qf.multiply(u, v)
        assert w.radius == u.radius + v.radius
        for n, val in ref.items():
            assert abs(w[n] - val) <= 1e-14 * (1 + abs(val))
        assert sum(1 for _ in w.items()) <= len(ref)


def test_power_matches_triple_loop():
    g = rng(4)
    for _ in range(10):
        box = LatticeBox(2, 2)
        pts = [box.indices()[i] for i in g.choice(len(box), size=7, replace=False)]
        u = CoefficientField.from_entries(W2, {n: complex(*g.normal(size=2)) for n in pts})
        ref: dict = {}
        for a, x in u.items():
            for b, y in u.items():
                for c, z in u.items():
                    n = tuple(i + j + l for i, j, l in zip(a, b, c))
                    ref[n] = ref.get(n, 0) + x * y * z
        cube = qf.power(u, 3)
        scale = max(abs(v) for v in ref.values())
        for n, val in ref.items():
            assert abs(cube[n] - val) <= 1e-13 * scale


def test_product_frequency_mismatch():
    with pytest.raises(qf.FrequencyMismatchError):
        qf.multiply(delta(W1, (1,)), delta(FrequencyVector((2.0,)), (1,)))


def test_commutative_associative():
    g = rng(5)
    for _ in range(20):
        a, b, c = (random_field(g, W2, 3) for _ in range(3))
        ab = qf.multiply(a, b)
        scale = np.max(np.abs(ab.data))
        assert ab.max_abs_diff(qf.multiply(b, a)) <= 1e-13 * scale
        l, r = qf.multiply(ab, c), qf.multiply(a, qf.multiply(b, c))
        assert l.max_abs_diff(r) <= 1e-13 * np.max(np.abs(l.data))


@pytest.mark.parametrize("k", [0.0, 0.5, 1.0, 2.0])
def test_banach_algebra_inequality(k):
    g = rng(6)
    for _ in range(40):
        u, v = random_field(g, W2, 3), random_field(g, W2, 3)
        assert qf.norm_vk(qf.multiply(u, v), k) <= qf.norm_vk(u, k) * qf.norm_vk(v, k) + 1e-12


def test_prune_drops_small_coefficients():
    u = CoefficientField.from_entries(W1, {(0,): 1.0, (3,): 1e-20})
    assert dict(qf.prune(u, 1e-10).items()) == {(0,): 1.0}
    assert qf.multiply(u, u, prune_below=1e-10).radius == 0


# derivative, multipliers, evaluation


def test_derivative_of_constant():
    assert not any(True for _ in qf.differentiate(delta(W1, (0,), 5.0)).items())


def test_derivative_single_mode():
    d = qf.differentiate(delta(FrequencyVector((2.0,)), (1,)))
    assert d[(1,)] == 2j


def test_leibniz_rule():
    g = rng(7)
    for _ in range(20):
        u, v = random_field(g, W2, 3), random_field(g, W2, 2)
        lhs = qf.differentiate(qf.multiply(u, v))
        rhs = qf.multiply(qf.differentiate(u), v) + qf.multiply(u, qf.differentiate(v))
        assert lhs.max_abs_diff(rhs) <= 1e-12 * max(1.0, np.max(np.abs(lhs.data)))


def test_kdv_multiplier_on_first_mode():
    assert qf.apply_multiplier(delta(W1, (1,)), builtin("kdv"))[(1,)] == -1j


def test_gbo_multiplier_at_minus_two():
    assert qf.apply_multiplier(delta(W1, (-2,)), builtin("gbo"))[(-2,)] == 4j


def test_multiplier_on_zero_field():
    z = qf.apply_multiplier(CoefficientField.zeros(W2, 2), builtin("kdv"))
    assert np.all(z.data == 0)


def test_derivative_norm_bound():
    g = rng(8)
    for _ in range(30):
        kappa = float(g.uniform(0.3, 2.0))
        eps = float(g.uniform(0.0, 0.95)) * kappa
        omega = random_omega(g, 2)
        u = random_field(g, omega, 6)
        c = qf.derivative_bound_constant(omega, eps, kappa)
        assert qf.norm_vk(qf.differentiate(u), eps) <= c * qf.norm_vk(u, kappa) * (1 + 1e-13)


def test_evaluate_constant_and_cosine():
    c = CoefficientField.from_entries(W1, {(0,): 2 - 1j})
    for x in (0.0, 1.3, -40.0):
        assert qf.evaluate(c, x) == 2 - 1j
    cosine = CoefficientField.from_entries(W1, {(1,): 0.5, (-1,): 0.5}, real=True)
    assert qf.evaluate(cosine, 0.0) == pytest.approx(1.0)
    assert qf.evaluate(cosine, math.pi) == pytest.approx(-1.0)
    assert qf.evaluate(cosine, np.array([0.0, math.pi])) == pytest.approx([1.0, -1.0])


def test_real_field_evaluates_real():
    g = rng(9)
    u = random_field(g, W2, 5, real=True)
    xs = g.uniform(-50, 50, size=100)
    vals = qf.evaluate(u, xs)
    assert np.max(np.abs(vals.imag)) <= 1e-12 * qf.norm_vk(u, 0.0)


def test_conjugate_examples():
    g = rng(10)
    u = random_field(g, W2, 4, real=True)
    assert qf.conjugate(u).max_abs_diff(u) <= 1e-14
    c = qf.conjugate(delta(W1, (1,), 1j))
    assert c[(-1,)] == -1j and c[(1,)] == 0


def test_conjugate_norm_and_values():
    g = rng(11)
    for _ in range(20):
        u = random_field(g, W2, 4)
        k = float(g.uniform(0, 2))
        assert qf.norm_vk(qf.conjugate(u), k) == pytest.approx(qf.norm_vk(u, k), rel=1e-15)
        x = float(g.uniform(-10, 10))
        assert qf.evaluate(qf.conjugate(u), x) == pytest.approx(np.conj(qf.evaluate(u, x)), abs=1e-12)


def test_realness_closure():
    g = rng(12)
    u, v = random_field(g, W2, 3, real=True), random_field(g, W2, 3, real=True)
    for w in (qf.multiply(u, v), qf.differentiate(u), qf.apply_multiplier(u, builtin("kdv"))):
        assert w.real and qf.realness_defect(w) <= 1e-12
    broken = qf.apply_multiplier(u, builtin("dnls"))
    assert not broken.real and qf.realness_defect(broken) > 1e-6


def test_real_flag_validated():
    with pytest.raises(ValueError):
        CoefficientField.from_entries(W1, {(1,): 1.0}, real=True)


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        CoefficientField.from_entries(W1, {(1,): float("nan")})


def test_json_roundtrip_in_order():
    u = random_field(rng(13), W2, 3)
    d = u.to_json_dict()
    ns = [tuple(e["n"]) for e in d["entries"]]
    assert ns == sorted(ns)
    back = CoefficientField.from_json_dict(d)
    assert back.max_abs_diff(u) == 0.0


def test_truncate_and_outside_mass():
    u = CoefficientField.exponential_preset(W2, 1.0, 1.0, 4)
    t = u.truncate(2)
    assert t.support_radius() == 2
    assert u.outside_mass(2) == pytest.approx(qf.norm_vk(u, 0) - qf.norm_vk(t, 0))


@given(
    st.lists(st.tuples(st.integers(-3, 3), st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=7),
    st.lists(st.tuples(st.integers(-3, 3), st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=7),
    st.sampled_from([0.0, 0.5, 1.0]),
)
def test_algebra_property(ue, ve, k):
    u = CoefficientField.from_entries(W1, [((n,), complex(a, b)) for n, a, b in ue])
    v = CoefficientField.from_entries(W1, [((n,), complex(a, b)) for n, a, b in ve])
    assert qf.norm_vk(u * v, k) <= qf.norm_vk(u, k) * qf.norm_vk(v, k) + 1e-12
