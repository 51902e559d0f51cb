import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwadc import geom, pwa
from pwadc.geom import Polyhedron
from pwadc.pwa import AffinePiece, PwaFunction

from helpers import abs_model, affine_model, grid_2x2, max_2d, negabs_model, pwa_1d, zigzag


def test_validate_examples():
    assert pwa.validate(abs_model(), n_samples=1000).ok
    bad = pwa_1d([-1, 0, 1], [(-1, 0), (1, 0.5)])
    rep = pwa.validate(bad, n_samples=1000)
    assert [(i, j) for i, j, _ in rep.discontinuities] == [(0, 1)]
    assert rep.discontinuities[0][2] == pytest.approx(0.5)
    over = PwaFunction([AffinePiece([0, 0], 0)] * 2,
                       [Polyhedron.box([0, 0], [2, 2]), Polyhedron.box([1, 1], [3, 3])],
                       Polyhedron.box([0, 0], [3, 3]))
    rep = pwa.validate(over, n_samples=1000)
    assert rep.overlaps == [(0, 1)]
    assert rep.uncovered > 0
    assert "overlapping" in rep.summary()


def test_eval_examples():
    assert pwa.eval(abs_model(), [-0.5]) == pytest.approx(0.5)
    assert pwa.eval(zigzag(), [1.5]) == pytest.approx(0.5)
    with pytest.raises(pwa.OutOfDomain):
        pwa.eval(zigzag(), [7.0])
    with pytest.raises(pwa.OutOfDomain):
        zigzag().eval_many(np.array([[0.0], [7.0]]))


def test_neighbor_examples():
    assert pwa.neighbor_pairs(zigzag()) == {(0, 1), (1, 2)}
    assert pwa.neighbor_pairs(grid_2x2()) == {(0, 1), (0, 2), (1, 3), (2, 3)}
    assert pwa.neighbor_pairs(affine_model()) == set()


def test_fold_examples():
    f = abs_model()
    assert pwa.classify_folds(f).V == {(0, 1)} and pwa.classify_folds(f).A == set()
    assert pwa.classify_folds(negabs_model()).A == {(0, 1)}
    fs = pwa.classify_folds(zigzag())
    assert fs.V == {(0, 1)} and fs.A == {(1, 2)}
    assert fs.ordered() == [(0, 1), (1, 2)]


def test_coincident_pieces_are_no_fold():
    f = pwa_1d([-1, 0, 1], [(1, 0), (1, 0)])
    fs = pwa.classify_folds(f)
    assert fs.I == {(0, 1)} and not fs.V and not fs.A


def test_foldsets_invariants():
    with pytest.raises(ValueError):
        pwa.FoldSets({(0, 1)}, {(0, 1)}, {(0, 1)})
    with pytest.raises(ValueError):
        pwa.FoldSets(set(), {(0, 1)}, set())


@pytest.mark.parametrize("make", [abs_model, negabs_model, zigzag, grid_2x2, max_2d])
def test_negation_swaps_folds(make):
    f = make()
    a, b = pwa.classify_folds(f), pwa.classify_folds(-f)
    assert a.V == b.A and a.A == b.V


@pytest.mark.parametrize("make", [zigzag, grid_2x2, max_2d])
def test_fold_sign_uniform_on_region(make, rng):
    f = make()
    fs = pwa.classify_folds(f)
    for (i, j), sgn in [(p, 1) for p in fs.V] + [(p, -1) for p in fs.A]:
        X = geom.sample_interior(f.regions[i], 100, rng, margin=1e-6)
        d = X @ (f.pieces[i].a - f.pieces[j].a) + f.pieces[i].b - f.pieces[j].b
        assert (sgn * d > 0).all()


def test_mpc_law_valid_and_sign_uniform(mpc, rng):
    f = mpc(1)
    assert pwa.validate(f, n_samples=2000).ok
    fs = pwa.classify_folds(f)
    for (i, j), sgn in [(p, 1) for p in fs.V] + [(p, -1) for p in fs.A]:
        X = geom.sample_interior(f.regions[i], 100, rng, margin=1e-6)
        d = X @ (f.pieces[i].a - f.pieces[j].a) + f.pieces[i].b - f.pieces[j].b
        assert (sgn * d > -1e-12).all()


def test_eval_agrees_across_facets(mpc):
    f = mpc(1)
    for i, j in pwa.neighbor_pairs(f):
        R = f.regions[i]
        for r in range(R.m):
            x, rad = geom.facet_center(R, r)
            if rad > 1e-7 and f.regions[j].contains(x, tol=1e-7):
                assert abs(f.pieces[i](x) - f.pieces[j](x)) <= 1e-6


def test_json_roundtrip_bit_identical(mpc):
    f = mpc(1)
    text = json.dumps(f.to_json())
    g = PwaFunction.from_json(json.loads(text))
    assert json.dumps(g.to_json()) == text
    with pytest.raises(ValueError):
        PwaFunction.from_json({**f.to_json(), "n": 3})


def test_constructor_guards():
    with pytest.raises(ValueError):
        PwaFunction([], [], Polyhedron.box([0], [1]))
    with pytest.raises(ValueError):
        PwaFunction([AffinePiece([1, 2], 0)], [Polyhedron.box([0], [1])], Polyhedron.box([0], [1]))
    with pytest.raises(ValueError):
        AffinePiece([np.inf], 0)


def test_domain_from_regions():
    f = grid_2x2()
    D = pwa.domain_from_regions(f.regions)
    X = np.random.default_rng(0).uniform(-1.5, 1.5, (2000, 2))
    assert (D.contains_many(X) == (np.abs(X) <= 1).all(axis=1)).all()


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=6), st.floats(-2, 2))
def test_random_1d_chain_is_valid(slopes, b0):
    breaks = np.arange(len(slopes) + 1, dtype=float)
    pieces, b = [], b0
    for k, a in enumerate(slopes):
        if k:
            b = pieces[-1][0] * k + pieces[-1][1] - a * k
        pieces.append((a, b))
    f = pwa_1d(breaks, pieces)
    rep = pwa.validate(f, n_samples=200)
    assert rep.ok, rep.summary()
    fs = pwa.classify_folds(f)
    assert fs.V | fs.A <= fs.I == {(k, k + 1) for k in range(len(slopes) - 1)}
    for k, kk in fs.V:
        assert slopes[kk] > slopes[k]
    for k, kk in fs.A:
        assert slopes[kk] < slopes[k]
