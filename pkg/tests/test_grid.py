"""Grid, offset-quadrature and test-function checks.

Counting oracles used below:
  - d=1, eps=0.1, h=0.025, T=1: lattice step h/eps = 1/4, so k = -4..4
    (9 offsets); boundary pair at |xi| = 1 gets half weight; total weight
    7*(1/4) + 2*(1/8) = 2 = |B_1| in d=1.
  - d=1, eps=h: step 1, offsets {-1, 0, 1}, weights {1/2, 1, 1/2}, total 2.
  - d=2, eps=h, T=1: five offsets with |k| <= 1; all four unit offsets sit
    on the shell, total weight 1 + 4*(1/2) = 3, within the lattice-shell
    tolerance of |B_1| = pi.
"""

import math
import os

import numpy as np
import pytest

from nlg import grid as G


def test_make_grid_1d_nodes():
    dom = G.make_grid((0, 1), 0.25, d=1)
    assert dom.shape == (4,)
    assert np.allclose(dom.nodes()[:, 0], [0.125, 0.375, 0.625, 0.875])


def test_make_grid_2d_nodes():
    dom = G.make_grid(((0, 1), (0, 1)), 0.5, d=2)
    assert dom.n_nodes == 4
    assert dom.mask_measure("all") == pytest.approx(1.0)


def test_make_grid_non_divisible():
    with pytest.raises(ValueError):
        G.make_grid((0, 1), 0.3, d=1)


def test_masks_aligned_boxes():
    dom = G.make_grid((0, 2), 0.25, d=1)
    dom.add_box_mask("left", (0, 1))
    assert dom.mask_count("left") == 4
    assert dom.mask_measure("left") == pytest.approx(1.0)
    with pytest.raises(ValueError):
        dom.add_box_mask("bad", (0, 1.1))
    with pytest.raises(ValueError):
        dom.add_box_mask("outside", (0, 3))


def test_boundary_distance():
    dom = G.make_grid((0, 1), 0.25, d=1)
    d = dom.boundary_distance("all")
    assert np.allclose(d, [0.125, 0.375, 0.375, 0.125])


def test_offset_set_fine_1d():
    off = G.offset_set(0.1, 0.025, 1.0, d=1)
    assert len(off) == 9
    ks = sorted(o.k[0] for o in off)
    assert ks == list(range(-4, 5))
    assert off.total_weight() == pytest.approx(2.0)
    # shell offsets carry half weight
    by_k = {o.k[0]: o for o in off}
    assert by_k[4].w == pytest.approx(0.125)
    assert by_k[2].w == pytest.approx(0.25)
    assert np.allclose(by_k[4].xi, [1.0])


def test_offset_set_coarse_1d():
    off = G.offset_set(0.1, 0.1, 1.0, d=1)
    assert sorted(o.k[0] for o in off) == [-1, 0, 1]
    assert off.total_weight() == pytest.approx(2.0)


def test_offset_set_2d_unit():
    off = G.offset_set(0.25, 0.25, 1.0, d=2)
    assert len(off) == 5
    tw = off.total_weight()
    # |B_1| = pi, shell tolerance 2*(h/eps)*perimeter = 4pi at step 1
    assert abs(tw - math.pi) <= 2 * 1.0 * (2 * math.pi)
    assert tw == pytest.approx(3.0)


def test_offset_set_symmetry_and_cap():
    for d in (1, 2):
        off = G.offset_set(0.2, 0.05, 1.5, d=d)
        table = {o.k: o.w for o in off}
        for o in off:
            mk = tuple(-c for c in o.k)
            assert mk in table and table[mk] == o.w
            assert np.linalg.norm(o.xi) <= 1.5 + 1e-9


def test_offset_set_weight_converges_2d():
    # finer lattice steps approach the disc area, first order in the step
    # with the shell bound 2*(h/eps)*perimeter
    errs = []
    for q in (4, 8, 16, 32):
        tw = G.offset_set(1.0, 1.0 / q, 1.0, d=2).total_weight()
        err = abs(tw - math.pi)
        assert err <= 2 * (1.0 / q) * (2 * math.pi)
        errs.append(err)
    assert errs[-1] < errs[0]


def test_offset_set_eps_not_multiple():
    with pytest.raises(ValueError):
        G.offset_set(0.1, 0.03, 1.0)


def test_shifted_pairs_1d_counts():
    dom = G.make_grid((0, 1), 0.25, d=1)
    i, j = G.shifted_pairs(dom, "all", (1,))
    assert len(i) == 3 and np.array_equal(j - i, np.ones(3, dtype=np.int64))
    i, j = G.shifted_pairs(dom, "all", (0,))
    assert len(i) == 4 and np.array_equal(i, j)
    i, j = G.shifted_pairs(dom, "all", (5,))
    assert len(i) == 0
    # reversal bijection
    i1, j1 = G.shifted_pairs(dom, "all", (-1,))
    assert sorted(zip(j1, i1)) == sorted(zip(*G.shifted_pairs(dom, "all", (1,))))


def test_shifted_pairs_2d_mask():
    dom = G.make_grid(((0, 1), (0, 1)), 0.25, d=2)
    dom.add_box_mask("sub", ((0.25, 1.0), (0.0, 0.5)))
    i, j = G.shifted_pairs(dom, "sub", (1, 1))
    # base x-index in {1,2}, y-index in {0}; 2 pairs
    assert len(i) == 2
    pts = dom.nodes("all")
    for a, b in zip(i, j):
        assert np.allclose(pts[b] - pts[a], [0.25, 0.25])


def test_sample_step_testfn():
    dom = G.make_grid((0, 1), 0.25, d=1)
    tf = G.step_testfn(0.5, 1.0)
    u = G.sample_testfn(tf, dom)
    assert np.allclose(u.values[:, 0], [0, 0, 1, 1])  # 0.625 lies on the >= side


def test_sample_affine_testfn():
    dom = G.make_grid((0, 1), 0.5, d=1)
    u = G.sample_testfn(G.affine_testfn(2.0), dom)
    assert np.allclose(u.values[:, 0], [0.5, 1.5])


def test_sample_two_piece_with_slope():
    dom = G.make_grid((0, 1), 0.25, d=1)
    tf = G.step_testfn(0.5, 3.0, base_L=1.0)
    u = G.sample_testfn(tf, dom)
    assert np.allclose(u.values[:, 0], [0.125, 0.375, 3.625, 3.875])


def test_step_tie_respects_normal_sign():
    dom = G.make_grid((0, 1), 0.25, d=1)
    # interface exactly on a node
    tfp = G.step_testfn(0.625, 1.0, sign=1)
    tfm = G.step_testfn(0.625, 1.0, sign=-1)
    up = G.sample_testfn(tfp, dom).values[:, 0]
    um = G.sample_testfn(tfm, dom).values[:, 0]
    assert np.allclose(up, [0, 0, 1, 1])   # node on interface takes zeta
    assert np.allclose(um, [1, 1, 1, 0])


def test_staircase_metadata():
    tf = G.staircase_testfn([0.25, 0.5, 0.75], [0, 1, 3, 2])
    assert len(tf.jumps) == 3
    zetas = [float(j.zeta[0]) for j in tf.jumps]
    assert zetas == [1.0, 2.0, -1.0]
    assert sum(abs(z) for z in zetas) == pytest.approx(4.0)
    dom = G.make_grid((0, 1), 0.125, d=1)
    u = G.sample_testfn(tf, dom)
    assert np.allclose(u.values[:, 0], [0, 0, 1, 1, 3, 3, 2, 2])


def test_piece_measures():
    tf = G.staircase_testfn([0.25], [1, 2])
    assert tf.piece_measures((0, 1)) == pytest.approx([0.25, 0.75])
    tf2 = G.step_testfn(0.5, 1.0, d=2, m=1, axis=0, box=((0, 1), (0, 2)))
    assert tf2.jumps[0].measure == pytest.approx(2.0)
    assert tf2.piece_measures(((0, 1), (0, 2))) == pytest.approx([1.0, 1.0])


def test_uncovered_node_raises():
    dom = G.make_grid((0, 1), 0.25, d=1)
    tf = G.TestFunction(1, 1, [G.Piece(np.zeros(1), np.zeros((1, 1)),
                                       axis=0, lo=None, hi=0.5)])
    with pytest.raises(ValueError):
        G.sample_testfn(tf, dom)


def test_truncate_field():
    dom = G.make_grid((0, 1), 1.0 / 3, d=1)
    u = G.Field(dom, np.array([-5.0, 0.2, 7.0]))
    t = G.truncate_field(u, 1.0)
    assert np.allclose(t.values[:, 0], [-1, 0.2, 1])
    # M above the sup norm is the identity
    t2 = G.truncate_field(u, 10.0)
    assert np.array_equal(t2.values, u.values)
    # clamp idempotence across nested levels
    rng = np.random.default_rng(3)
    v = G.Field(dom, rng.standard_normal(3) * 4)
    for M in (0.5, 1.0, 2.0):
        a = G.truncate_field(G.truncate_field(v, M + 1), M)
        b = G.truncate_field(v, M)
        assert np.array_equal(a.values, b.values)


def test_glue_fields():
    dom = G.make_grid((0, 1), 0.25, d=1)
    u = G.constant_field(dom, 0.0)
    v = G.constant_field(dom, 2.0)
    phi = G.Field(dom, np.array([1.0, 1.0, 0.0, 0.0]))
    w = G.glue_fields(u, v, phi)
    assert np.allclose(w.values[:, 0], [0, 0, 2, 2])
    assert np.array_equal(G.glue_fields(u, v, G.constant_field(dom, 1.0)).values,
                          u.values)
    assert np.array_equal(G.glue_fields(u, v, G.constant_field(dom, 0.0)).values,
                          v.values)
    with pytest.raises(ValueError):
        G.glue_fields(u, v, G.constant_field(dom, 1.5))


def test_extend_reflect_1d():
    dom = G.make_grid((0, 1), 1.0 / 3, d=1)
    u = G.Field(dom, np.array([1.0, 2.0, 3.0]))
    e = G.extend_reflect(u, 1)
    assert np.allclose(e.values[:, 0], [1, 1, 2, 3, 3])
    assert e.domain.box[0] == pytest.approx((-1.0 / 3, 1 + 1.0 / 3))
    with pytest.raises(ValueError):
        G.extend_reflect(u, 4)


def test_extend_reflect_constant_2d():
    dom = G.make_grid(((0, 1), (0, 1)), 0.25, d=2)
    u = G.constant_field(dom, 3.5)
    e = G.extend_reflect(u, 2)
    assert np.allclose(e.values, 3.5)
    assert e.domain.shape == (8, 8)


def test_field_validation():
    dom = G.make_grid((0, 1), 0.25, d=1)
    with pytest.raises(ValueError):
        G.Field(dom, np.zeros(3))
    with pytest.raises(ValueError):
        G.Field(dom, np.full((4, 1), np.nan))
    with pytest.raises(ValueError):
        G.Field(dom, np.zeros((4, 5)))


def test_csv_roundtrip(tmp_path):
    dom = G.make_grid((0, 1), 0.125, d=1)
    rng = np.random.default_rng(11)
    u = G.Field(dom, rng.standard_normal((8, 2)))
    p = str(tmp_path / "f.csv")
    G.save_field_csv(u, p)
    v = G.load_field_csv(p)
    assert v.domain.shape == dom.shape
    assert np.allclose(v.values, u.values, rtol=0, atol=0)  # repr() is exact


def test_csv_roundtrip_2d(tmp_path):
    dom = G.make_grid(((0, 1), (0, 0.5)), 0.25, d=2)
    rng = np.random.default_rng(12)
    u = G.Field(dom, rng.standard_normal((dom.n_nodes, 1)))
    p = str(tmp_path / "f2.csv")
    G.save_field_csv(u, p)
    v = G.load_field_csv(p)
    assert v.domain.shape == dom.shape
    assert np.allclose(v.values, u.values)


def test_pgm_roundtrip(tmp_path):
    dom = G.make_grid(((0, 1), (0, 1)), 1.0 / 16, d=2)
    rng = np.random.default_rng(13)
    u = G.Field(dom, rng.uniform(-2, 5, (dom.n_nodes, 1)))
    for binary in (False, True):
        p = str(tmp_path / ("img_%d.pgm" % binary))
        G.save_pgm(u, p, binary=binary)
        assert os.path.exists(p + ".meta")
        v = G.load_pgm(p)
        assert v.domain.shape == dom.shape
        # 8-bit quantization: absolute error at most one gray level
        lvl = (u.values.max() - u.values.min()) / 255.0
        assert np.max(np.abs(v.values - u.values)) <= lvl * 0.51


def test_pgm_plain_and_binary_agree(tmp_path):
    dom = G.make_grid(((0, 1), (0, 1)), 0.25, d=2)
    u = G.Field(dom, np.linspace(0, 1, 16).reshape(-1, 1))
    pa = str(tmp_path / "a.pgm")
    pb = str(tmp_path / "b.pgm")
    G.save_pgm(u, pa, binary=False)
    G.save_pgm(u, pb, binary=True)
    assert np.array_equal(G.load_pgm(pa).values, G.load_pgm(pb).values)
