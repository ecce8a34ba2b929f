import numpy as np
import pytest

from smoothcontact.dual import Dual, primal
from smoothcontact.sdf import (ConvexPolyhedron, OrientedPointcloud, SmoothSdf, Sphere, Subtraction,
                               Superquadric, Union, sphere_trace_project)

from oracles import derivatives_agree, directional_check

UNIT_SPHERE_SQ = dict(a=1.0, b=1.0, c=1.0, eps1=1.0, eps2=1.0)


def _fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    phi = np.arccos(1 - 2 * i / n)
    th = np.pi * (1 + 5 ** 0.5) * i
    return np.stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)], axis=1)


def _sphere_cloud(n=200, theta=0.3):
    pts = _fibonacci_sphere(n)
    return OrientedPointcloud(points=pts, normals=pts, lengthscales=np.full(n, theta))


def _dirs(n, seed):
    d = np.random.default_rng(seed).normal(size=(n, 3))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


# -- superquadric -----------------------------------------------------------------

def test_sq_inside_outside_examples():
    sq = Superquadric(**UNIT_SPHERE_SQ)
    assert sq.inside_outside(np.array([0.0, 0.0, 1.0]))[0] == pytest.approx(1.0, abs=1e-12)
    assert sq.inside_outside(np.array([0.0, 0.0, 2.0]))[0] == pytest.approx(4.0, abs=1e-12)
    boxy = Superquadric(a=1.0, b=1.0, c=1.0, eps1=0.1, eps2=0.1)
    # direct evaluation: [(1)^10 + (1)^10]^1 + 1^10
    f = boxy.inside_outside(np.array([1.0, 1.0, 1.0]))[0]
    assert f == pytest.approx(3.0, rel=1e-9)
    assert f > 1


def test_sq_distance_examples():
    sdf = SmoothSdf(Superquadric(**UNIT_SPHERE_SQ))
    for r, want in ((1.0, 0.0), (2.0, 0.25), (0.5, -2.0)):
        p = _dirs(5, 0) * r
        np.testing.assert_allclose(sdf.value(p), want, atol=1e-9)


def test_sq_rejects_bad_parameters():
    with pytest.raises(ValueError):
        Superquadric(a=1, b=1, c=1, eps1=0.0, eps2=1)
    with pytest.raises(ValueError):
        Superquadric(a=1, b=1, c=1, eps1=1, eps2=2.5)
    with pytest.raises(ValueError):
        Superquadric(a=-1, b=1, c=1, eps1=1, eps2=1)


def test_sq_normals():
    sdf = SmoothSdf(Superquadric(**UNIT_SPHERE_SQ))
    _, _, n = sdf.evaluate(np.array([[0.0, 0.0, 2.0]]), tau_n=1e-8)
    np.testing.assert_allclose(n[0], [0, 0, 1], atol=1e-6)
    _, _, n0 = sdf.evaluate(np.zeros((1, 3)), tau_n=1e-3)
    assert np.all(np.isfinite(n0)) and np.linalg.norm(n0) < 1e-6
    sq = Superquadric(a=1.0, b=0.6, c=0.4, eps1=0.4, eps2=0.7)
    x = np.random.default_rng(3).uniform(-1, 1, (200, 3))
    _, n, _ = sq.local(x, 1e-3)
    assert np.all(np.linalg.norm(sq.local(x, 1e-3)[2], axis=-1) <= 1.0)
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1e-6
        fd = (sq.inside_outside(x + e)[0] - sq.inside_outside(x - e)[0]) / 2e-6
        assert derivatives_agree(sq.inside_outside(x)[1][:, k], fd)


# -- convex polyhedron --------------------------------------------------------------

def test_cp_examples():
    half = ConvexPolyhedron(normals=[[0, 0, 1.0]], points=[[0, 0, 0.0]], tau=0.1)
    x = np.random.default_rng(0).normal(size=(20, 3))
    np.testing.assert_allclose(SmoothSdf(half).value(x), x[:, 2], atol=1e-15)
    cube = SmoothSdf(ConvexPolyhedron.box((1, 1, 1), tau=1e-6))
    assert cube.value(np.zeros(3)) == pytest.approx(-0.5, abs=1e-5)
    assert cube.value(np.array([2.0, 0, 0])) == pytest.approx(1.5, abs=1e-5)


@pytest.mark.parametrize("tau", [1e-6, 1e-3, 0.1])
def test_cp_lse_bounds(tau):
    cp = ConvexPolyhedron.box((1.0, 0.5, 2.0), tau=tau)
    x = np.random.default_rng(1).uniform(-2, 2, (1000, 3))
    exact = np.max(x @ cp.normals.T - np.sum(cp.normals * cp.points, axis=1), axis=1)
    phi = SmoothSdf(cp).value(x)
    assert np.all(phi >= exact - 1e-12)
    assert np.all(phi <= exact + tau * np.log(6) + 1e-12)
    if tau == 1e-6:
        assert np.max(phi - exact) < 1e-5


def test_cp_rejects_non_unit_normals():
    with pytest.raises(ValueError):
        ConvexPolyhedron(normals=[[0, 0, 2.0]], points=[[0, 0, 0.0]])


# -- oriented pointcloud ---------------------------------------------------------------

def test_opc_examples():
    x = np.random.default_rng(0).normal(size=(30, 3))
    one = OrientedPointcloud(points=[[0, 0, 0.0]], normals=[[0, 0, 1.0]], lengthscales=[0.5])
    np.testing.assert_allclose(SmoothSdf(one).value(x), x[:, 2], atol=1e-12)
    two = OrientedPointcloud(points=[[0, 0, 0.0], [1, 2, 0.0]], normals=[[0, 0, 1.0]] * 2, lengthscales=[0.5, 0.2])
    np.testing.assert_allclose(SmoothSdf(two).value(x), x[:, 2], atol=1e-12)
    # far from every point the weights would underflow without log-space normalization
    assert np.isfinite(SmoothSdf(two).value(np.array([1e3, 0, 5.0])))


def test_opc_matches_direct_formula():
    cloud = _sphere_cloud(60, 0.4)
    x = np.random.default_rng(1).normal(size=(40, 3))
    diff = x[:, None, :] - cloud.points[None]
    B = np.exp(-np.sum(diff ** 2, axis=-1) / (2 * 0.4 ** 2))
    want = np.sum(B * np.sum(diff * cloud.normals, axis=-1), axis=1) / np.sum(B, axis=1)
    np.testing.assert_allclose(SmoothSdf(cloud).value(x), want, atol=1e-12)


def test_opc_sphere_zero_crossing():
    # the Gaussian blend of tangent planes pushes the crossing outward by roughly theta^2 / r
    sdf = SmoothSdf(_sphere_cloud())
    d = _dirs(50, 2)
    assert np.all(sdf.value(1.2 * d) > 0)
    assert np.all(sdf.value(0.8 * d) < 0)
    r = np.linspace(0.8, 1.2, 801)
    vals = sdf.value(d[:, None, :] * r[None, :, None])
    crossing = r[np.argmax(vals > 0, axis=1)]
    assert np.max(np.abs(crossing - 1.0)) < 0.05


# -- composition ------------------------------------------------------------------------

def test_union_bounds():
    a = Sphere(radius=1.0)
    b = Sphere(radius=0.7, center=np.array([0.8, 0.0, 0.0]))
    c = SmoothSdf(ConvexPolyhedron.box((0.5, 2, 0.5), tau=1e-3))
    tau = 0.05
    u = SmoothSdf(Union([a, b, c.root], tau=tau))
    x = np.random.default_rng(4).uniform(-2, 2, (1000, 3))
    kids = np.stack([SmoothSdf(k).value(x) for k in (a, b, c.root)], axis=-1)
    m = kids.min(axis=1)
    phi = u.value(x)
    assert np.all(phi <= m + 1e-12)
    assert np.all(phi >= m - tau * np.log(3) - 1e-12)
    np.testing.assert_allclose(SmoothSdf(Union([a])).value(x), SmoothSdf(a).value(x))
    twin = SmoothSdf(Union([a, Sphere(radius=1.0)], tau=tau))
    np.testing.assert_allclose(twin.value(x), SmoothSdf(a).value(x) - tau * np.log(2), atol=1e-12)


def test_subtraction_cavity():
    big, small = Sphere(radius=1.0), Sphere(radius=0.3)
    tau = 0.01
    sub = SmoothSdf(Subtraction(big, small, tau=tau))
    assert sub.value(np.zeros(3)) > 0
    assert sub.value(np.array([0.6, 0.0, 0.0])) < 0
    x = np.random.default_rng(5).uniform(-1.5, 1.5, (500, 3))
    hard = np.maximum(SmoothSdf(big).value(x), -SmoothSdf(small).value(x))
    phi = sub.value(x)
    assert np.all(phi >= hard - 1e-12) and np.all(phi <= hard + tau * np.log(2) + 1e-12)


def test_constructor_validation():
    with pytest.raises(ValueError):
        Union([])
    with pytest.raises(ValueError):
        Sphere(radius=0.0)
    with pytest.raises(ValueError):
        OrientedPointcloud(points=[[0, 0, 0.0]], normals=[[0, 0, 1.0]], lengthscales=[0.0])


# -- sign consistency ----------------------------------------------------------------------

def test_inside_outside_sign_consistency():
    rng = np.random.default_rng(6)
    d = _dirs(1000, 7)
    sq = Superquadric(a=1.0, b=0.6, c=0.4, eps1=0.4, eps2=0.7)
    # f scales as k^(2 / eps1) along a ray, so d * f(d)^(-eps1 / 2) is on the surface
    on = d * sq.inside_outside(d)[0][:, None] ** (-sq.eps1 / 2)
    k = rng.uniform(0.05, 0.95, (1000, 1))
    s = SmoothSdf(sq)
    assert np.all(s.value(on * k) < 0) and np.all(s.value(on / k) > 0)

    cube = SmoothSdf(ConvexPolyhedron.box((1, 1, 1), tau=1e-3))
    assert np.all(cube.value(rng.uniform(-0.49, 0.49, (1000, 3))) < 0)
    assert np.all(cube.value(d * rng.uniform(0.87, 3.0, (1000, 1))) > 0)

    cloud = SmoothSdf(_sphere_cloud())
    assert np.all(cloud.value(d * rng.uniform(0.3, 0.85, (1000, 1))) < 0)
    assert np.all(cloud.value(d * rng.uniform(1.15, 1.6, (1000, 1))) > 0)

    ball = SmoothSdf(Sphere(radius=0.5))
    assert np.all(ball.value(d * rng.uniform(0, 0.499, (1000, 1))) < 0)
    assert np.all(ball.value(d * rng.uniform(0.501, 3, (1000, 1))) > 0)


# -- gradients ----------------------------------------------------------------------------

SHAPES = {
    "superquadric": Superquadric(a=1.0, b=0.6, c=0.4, eps1=0.4, eps2=0.7, pose=np.array([0.1, 0, 0, 0.2, 0.1, 0])),
    "sq_sphere": Superquadric(**UNIT_SPHERE_SQ),
    "polyhedron": ConvexPolyhedron.box((1, 0.5, 0.8), tau=0.05),
    "pointcloud": _sphere_cloud(),
    "sphere": Sphere(radius=0.6, center=np.array([0.1, 0.2, 0.0])),
    "union": Union([Superquadric(a=0.5, b=0.5, c=0.2, eps1=0.3, eps2=0.3),
                    ConvexPolyhedron.box((0.3, 0.3, 1.0), tau=0.05)], tau=0.05),
    "subtraction": Subtraction(ConvexPolyhedron.box((1, 1, 1), tau=0.05), Sphere(radius=0.4), tau=0.05),
}


@pytest.mark.parametrize("name", sorted(SHAPES))
def test_gradients_match_finite_differences(name):
    sdf = SmoothSdf(SHAPES[name])
    rng = np.random.default_rng(8)
    x = rng.uniform(-1.0, 1.0, (200, 3))
    x = x[np.linalg.norm(x, axis=1) > 0.05]
    # analytic gradient against central differences of the value
    g = sdf.gradient(x)
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1e-6
        fd = (sdf.value(x + e) - sdf.value(x - e)) / 2e-6
        assert derivatives_agree(g[:, k], fd, rtol=1e-4, atol=1e-6), k
    # forward mode through the value and through the normal
    d = rng.normal(size=x.shape)
    fwd, fd = directional_check(lambda p: sdf.evaluate(p, 1e-3)[0], x, d, h=1e-6)
    assert derivatives_agree(fwd, fd, rtol=1e-4, atol=1e-6)
    fwd, fd = directional_check(lambda p: sdf.evaluate(p, 1e-3)[2], x, d, h=1e-6)
    assert derivatives_agree(fwd, fd, rtol=1e-4, atol=1e-6)


# -- projection -------------------------------------------------------------------------------

def test_sphere_trace_examples():
    ball = SmoothSdf(Sphere(radius=1.0))
    p = _dirs(10, 9) * 2.0
    out = sphere_trace_project(ball, p, n_iters=5)
    np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-3)
    on = _dirs(10, 10)
    np.testing.assert_allclose(sphere_trace_project(ball, on), on, atol=1e-12)
    cube = SmoothSdf(ConvexPolyhedron.box((1, 1, 1), tau=1e-6))
    q = sphere_trace_project(cube, np.array([[0.6, 0.1, -0.2]]))
    np.testing.assert_allclose(q[0], [0.5, 0.1, -0.2], atol=1e-3)


def test_sphere_trace_reduces_distance_statistically():
    sdf = SmoothSdf(Superquadric(a=1.0, b=0.6, c=0.4, eps1=0.4, eps2=0.7))
    d = _dirs(500, 11)
    on = d * sdf.leaves[0].inside_outside(d)[0][:, None] ** (-0.2)
    seeds = on + np.random.default_rng(12).normal(scale=0.05, size=on.shape)
    before = np.abs(sdf.value(seeds))
    after = np.abs(sdf.value(sphere_trace_project(sdf, seeds)))
    assert np.mean(after <= before) >= 0.9


def test_sphere_trace_vanishing_gradient_is_finite():
    sdf = SmoothSdf(Sphere(radius=1.0))
    out = sphere_trace_project(sdf, Dual(np.zeros((1, 3)), np.eye(3)[None]))
    np.testing.assert_allclose(primal(out), 0.0, atol=1e-12)
    assert np.all(np.isfinite(out.tan))
