import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wilsonline.errors import DomainError, ValidationError
from wilsonline.geometry import (LoopCurve, Mollifier, SmoothOneForm, circle, constant_form, exact_form,
                                 hopf_pair, line_integral, lipschitz_constant, load_loop, loop_from_dict,
                                 loop_to_dict, mollified_line_integral, partial_pairings, tube_separation,
                                 winding_form)


def unit_circle():
    return LoopCurve.fourier([[0, 0], [1, 0]], [[0, 0], [0, 1]], [[0, 0]])


def wavy_loop():
    def fn(t):
        a = 2 * np.pi * t
        return np.stack([np.cos(a) + 0.2 * np.cos(2 * a), np.sin(a) - 0.1 * np.sin(3 * a),
                         0.3 * np.sin(2 * a)], axis=1)
    return LoopCurve.from_function(fn, 3)


def gradient_form():
    # A = df with f = x y + sin z
    return exact_form(lambda p: np.stack([p[:, 1], p[:, 0], np.cos(p[:, 2])], axis=1))


def nonlinear_form():
    return SmoothOneForm(lambda p: np.stack([np.sin(p[:, 1]) * p[:, 2], np.exp(0.3 * p[:, 0]),
                                             p[:, 0] ** 2 * p[:, 1]], axis=1), "nonlinear")


def test_circle_eval_and_deriv():
    c = unit_circle()
    assert np.allclose(c.eval(0.0), [1, 0, 0], atol=1e-15)
    assert np.allclose(c.deriv(0.0), [0, 2 * np.pi, 0], atol=1e-14)
    assert np.allclose(c.eval(1.0), c.eval(0.0), atol=1e-14)


def test_square_midpoint_is_opposite_corner():
    sq = LoopCurve.polyline([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]])
    assert np.allclose(sq.eval(0.5), [1, 1, 0])
    assert np.allclose(sq.eval(1.0), [0, 0, 0])
    # one-sided derivative at a vertex picks the outgoing segment, speed = perimeter
    assert np.allclose(sq.deriv(0.25), [0, 4, 0])


def test_eval_outside_domain():
    with pytest.raises(DomainError):
        unit_circle().eval(1.5)
    with pytest.raises(DomainError):
        unit_circle().deriv(-0.1)


def test_from_function_recovers_coefficients():
    loop = LoopCurve.from_function(lambda t: np.stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t),
                                                       0 * t], axis=1), 2)
    assert np.allclose(loop.eval(np.linspace(0, 1, 7)), unit_circle().eval(np.linspace(0, 1, 7)),
                       atol=1e-14)


def test_exact_form_integrates_to_zero():
    assert abs(line_integral(wavy_loop(), gradient_form())) < 1e-8


def test_winding_form_gives_two_pi():
    assert abs(line_integral(unit_circle(), winding_form()) - 2 * np.pi) < 1e-6


def test_dx_over_quarter_circle():
    assert abs(line_integral(unit_circle(), constant_form([1, 0, 0]), 0.0, 0.25) - (-1.0)) < 1e-8


def test_line_integral_interval_errors():
    with pytest.raises(DomainError):
        line_integral(unit_circle(), winding_form(), 0.6, 0.2)
    assert line_integral(unit_circle(), winding_form(), 0.3, 0.3) == 0.0


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 1.0))
def test_reparametrization_invariance(shift):
    base = wavy_loop()
    shifted = LoopCurve.from_function(lambda t: base.eval(np.mod(t + shift, 1.0)), 3)
    form = nonlinear_form()
    assert abs(line_integral(base, form) - line_integral(shifted, form)) < 1e-8


def test_mollifier_mass_and_support():
    m = Mollifier(0.3)
    assert abs(m.total_mass() - 1.0) < 1e-8
    assert m.profile([[0.3 * 1.0001, 0, 0]])[0] == 0.0
    assert m.profile([[0.3 * 0.999, 0, 0]])[0] > 0.0
    assert abs(np.max(np.linalg.norm(m.nodes, axis=1))) < 1.0


def test_mollified_constant_form_is_exact():
    loop, form = wavy_loop(), constant_form([0.3, -1.2, 2.0])
    for eps in (0.05, 0.5):
        assert abs(mollified_line_integral(loop, form, Mollifier(eps), 0.1, 0.7)
                   - line_integral(loop, form, 0.1, 0.7)) < 1e-12


def test_mollified_affine_form_matches():
    loop = wavy_loop()
    form = SmoothOneForm(lambda p: np.stack([2.0 * p[:, 1], 0 * p[:, 0], -0.5 * p[:, 0]], axis=1))
    got = mollified_line_integral(loop, form, Mollifier(0.2), 0.0, 0.6)
    assert abs(got - line_integral(loop, form, 0.0, 0.6)) < 1e-6


def test_mollifier_convergence_is_monotone():
    loop, form = wavy_loop(), nonlinear_form()
    exact = line_integral(loop, form, 0.0, 0.8)
    errs = [abs(mollified_line_integral(loop, form, Mollifier(e), 0.0, 0.8) - exact)
            for e in (0.2, 0.1, 0.05)]
    assert errs[0] > errs[1] > errs[2]


def test_mollifier_sup_error_shrinks():
    loop, form = wavy_loop(), nonlinear_form()
    _, exact = partial_pairings(loop, form, grid=256)
    sups = []
    for eps in (0.2, 0.1, 0.05, 0.025):
        _, smooth = partial_pairings(loop, form, Mollifier(eps), grid=256)
        sups.append(np.max(np.abs(smooth - exact)))
    assert all(a > b for a, b in zip(sups, sups[1:]))


def test_lipschitz_constant():
    c = lipschitz_constant(unit_circle(), constant_form([1, 0, 0]))
    assert abs(c - 2 * np.pi) / (2 * np.pi) < 0.05
    assert lipschitz_constant(unit_circle(), constant_form([0, 0, 0])) == 0.0
    assert np.isfinite(lipschitz_constant(wavy_loop(), nonlinear_form(), Mollifier(0.1), grid=128))


def test_lipschitz_property_holds_on_grid():
    loop, form = wavy_loop(), nonlinear_form()
    t, p = partial_pairings(loop, form, grid=200)
    c = lipschitz_constant(loop, form, grid=200)
    diffs = np.abs(p[:, None] - p[None, :])
    assert np.all(diffs <= c * np.abs(t[:, None] - t[None, :]) + 1e-12)


def test_tube_separation_examples():
    a, b = hopf_pair()
    sep = tube_separation(a, b)
    assert sep.value > 0 and not sep.intersecting
    same = tube_separation(a, a)
    assert same.intersecting and same.value == 0.0
    par = tube_separation(circle(), circle(center=(0, 0, 1)))
    assert abs(par.value - 1.0) < 1e-6


def test_loop_json_roundtrip(tmp_path):
    for loop in (wavy_loop(), LoopCurve.polyline([[0, 0, 0], [1, 0, 0], [0, 1, 0]])):
        path = tmp_path / "loop.json"
        path.write_text(json.dumps(loop_to_dict(loop)))
        back = load_loop(path)
        t = np.linspace(0, 1, 11)
        assert np.allclose(back.eval(t), loop.eval(t))


def test_loop_json_errors():
    with pytest.raises(ValidationError):
        loop_from_dict({"form": "spline"})
    with pytest.raises(ValidationError):
        loop_from_dict({"form": "polyline", "vertices": [[0, 0, 0], [1, 0, 0]]})
    with pytest.raises(ValidationError):
        LoopCurve.polyline([[0, 0, 0], [0, 0, 0], [1, 0, 0]])
