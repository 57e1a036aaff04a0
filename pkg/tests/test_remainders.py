from fractions import Fraction

import numpy as np
import pytest

from nlparax import (
    Axis,
    Field,
    Frame,
    Grid,
    ModelKind,
    build_correctors,
    evaluate_remainder,
    term_table,
)
from nlparax.models.base import ModelState
from nlparax.remainders import PAIRS, base_power


def _periodic3(frame, n=48):
    return Grid((Axis("tau", 2.0, n), Axis("z", 3.0, n), Axis("y1", 2.5, n)),
                frame)


def _bandlimited(grid, seed=7, kmax=2, n_modes=6):
    rng = np.random.default_rng(seed)
    ms = grid.mesh()
    out = np.zeros(grid.shape)
    for _ in range(n_modes):
        ks = rng.integers(-kmax, kmax + 1, size=len(ms))
        ph = rng.uniform(0, 2 * np.pi)
        amp = rng.standard_normal()
        phase = sum(k * t / a.length for k, t, a in zip(ks, ms, grid.axes))
        out += amp * np.sin(2 * np.pi * phase + ph)
    return out


def test_base_power():
    assert base_power("ns-kuznetsov") == Fraction(3)
    assert base_power("ns-kzk") == Fraction(3)
    assert base_power("kuznetsov-kzk") == Fraction(2)
    assert base_power("kuznetsov-westervelt") == Fraction(2)


def test_term_table_structure(coeff):
    g = _periodic3(Frame.KZK, 12)
    for pair in ("ns-kzk", "kuznetsov-kzk"):
        tables = term_table(pair, g)
        assert tables
        for comp, terms in tables.items():
            ids = [t.term_id for t in terms]
            assert len(ids) == len(set(ids)), (pair, comp)
            for t in terms:
                assert t.power >= 0
                assert np.isfinite(t.coeff(coeff))
    with pytest.raises(ValueError):
        term_table("kzk-ns", g)


def test_term_table_components_per_pair():
    gk = Grid((Axis("t", 1.0, 16, periodic=False), Axis("x1", 2.0, 16),
               Axis("x2", 2.0, 16)), Frame.PHYSICAL)
    out = term_table("ns-kuznetsov", gk)
    assert set(out) == {"mass", "momentum_x1", "momentum_x2"}
    gp = _periodic3(Frame.KZK, 12)
    out = term_table("ns-kzk", gp)
    assert set(out) == {"mass", "momentum_axial", "momentum_y1"}
    assert set(term_table("kuznetsov-npe", gp)) == {"model"}


def test_zero_input_gives_zero_remainder(coeff):
    g = _periodic3(Frame.KZK, 12)
    res = evaluate_remainder("kuznetsov-kzk", coeff, {"Phi": Field.zeros(g)})
    assert res.base == Fraction(2)
    for f in res.fields.values():
        assert f.linf_norm() == 0.0


def test_missing_input_field_raises(coeff):
    g = _periodic3(Frame.KZK, 12)
    with pytest.raises(KeyError):
        evaluate_remainder("ns-kuznetsov", coeff, {"Phi": Field.zeros(g)})


def test_missing_axis_is_reported_by_name(coeff):
    g = Grid((Axis("tau", 2.0, 16),), Frame.KZK)
    f = Field(g, np.sin(np.pi * g.mesh()[0]))
    with pytest.raises(ValueError, match="'z'"):
        evaluate_remainder("kuznetsov-kzk", coeff, {"Phi": f})


def test_margins_reported_for_bounded_axes(coeff):
    g = Grid((Axis("t", 1.0, 32, periodic=False), Axis("x1", 2 * np.pi, 16)),
             Frame.PHYSICAL)
    T, X = g.mesh()
    u = Field(g, 0.1 * np.sin(X) * np.cos(np.pi * T))
    res = evaluate_remainder("ns-kuznetsov", coeff, {"u": u})
    assert any(m.get("t", 0) > 0 for m in res.margins.values())


def test_term_stats_rows(coeff):
    g = _periodic3(Frame.NPE, 12)
    psi = Field(g, _bandlimited(g))
    res = evaluate_remainder("ns-npe", coeff, {"Psi": psi},
                             with_term_stats=True)
    assert res.term_stats
    comps = {row[0] for row in res.term_stats}
    assert comps == set(res.fields)
    for comp, term_id, power, l2, linf in res.term_stats:
        assert isinstance(power, Fraction)
        assert l2 >= 0.0 and linf >= 0.0


def test_corrector_state_tuple_input_matches_mapping(coeff):
    g = Grid((Axis("z", 2 * np.pi, 32), Axis("tau", 2.0, 16),
              Axis("y1", 2.0, 16)), Frame.NPE)
    xi = Field(g, _bandlimited(g, seed=3))
    from nlparax.spectral import project_mean_zero
    xi = project_mean_zero(xi, "z")
    st = ModelState(ModelKind.NPE, 0.0, xi)
    cs = build_correctors(ModelKind.NPE, coeff, st)
    res_tuple = evaluate_remainder("ns-npe", coeff, (cs, st))
    res_map = evaluate_remainder("ns-npe", coeff, {"Psi": cs.potential})
    for comp in res_map.fields:
        d = np.abs(res_tuple.fields[comp].scalar
                   - res_map.fields[comp].scalar).max()
        assert d < 1e-10, comp


def test_printed_variant_differs_where_corrected(coeff):
    # the pairs with a corrected default must actually produce different
    # remainders under the two variants; the corrected one is the one the
    # off-shell identity closes against (exercised in the acceptance tests)
    g = _periodic3(Frame.KZK)
    phi = Field(g, _bandlimited(g))
    r_c = evaluate_remainder("ns-kzk", coeff, {"Phi": phi},
                             variant="consistent")
    r_p = evaluate_remainder("ns-kzk", coeff, {"Phi": phi},
                             variant="printed")
    diff = max(np.abs(r_c.fields[c].scalar - r_p.fields[c].scalar).max()
               for c in r_c.fields)
    assert diff > 1e-8


def test_pairs_all_evaluable(coeff):
    # smoke: every pair accepts a suitable input and returns finite fields
    inputs = {
        "ns-kuznetsov": (Grid((Axis("t", 1.0, 16, periodic=False),
                               Axis("x1", 2.0, 16)), Frame.PHYSICAL), "u"),
        "kuznetsov-westervelt": (Grid((Axis("t", 1.0, 16, periodic=False),
                                       Axis("x1", 2.0, 16)),
                                      Frame.PHYSICAL), "u"),
        "ns-kzk": (_periodic3(Frame.KZK, 12), "Phi"),
        "kuznetsov-kzk": (_periodic3(Frame.KZK, 12), "Phi"),
        "ns-npe": (_periodic3(Frame.NPE, 12), "Psi"),
        "kuznetsov-npe": (_periodic3(Frame.NPE, 12), "Psi"),
    }
    assert set(inputs) == set(PAIRS)
    for pair, (g, name) in inputs.items():
        f = Field(g, 0.01 * _bandlimited(g, seed=5, kmax=1))
        res = evaluate_remainder(pair, coeff, {name: f})
        for comp, fld in res.fields.items():
            assert np.isfinite(fld.values).all(), (pair, comp)
