"""Central finite-difference verification of every differentiable op.

Runs in 64-bit only: float32 rounding would dominate the difference
quotient. Each case builds a random scalar loss (projection against a
fixed random field) and compares analytic gradients against central
differences for every input that carries gradients.
"""

from __future__ import annotations

import numpy as np

from . import nn
from .conv import conv2d, conv3d
from .nn import batch_norm
from .shuffle import (
    macpi_to_views,
    pixel_shuffle_1d,
    pixel_shuffle_2d,
    views_to_macpi,
)
from .tensor import (
    Tensor,
    concat,
    flip,
    l1_loss,
    leaky_relu,
    mul,
    reshape,
    softmax,
    stack,
    tabs,
    tmean,
    transpose,
    tsum,
)


def fd_gradient(loss_fn, tensor, eps=1e-5):
    """Central differences of a scalar loss wrt every element of `tensor`."""
    grad = np.zeros_like(tensor.data)
    flat = tensor.data.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        f_plus = float(loss_fn().data)
        flat[i] = orig - eps
        f_minus = float(loss_fn().data)
        flat[i] = orig
        gflat[i] = (f_plus - f_minus) / (2.0 * eps)
    return grad


def check_gradients(loss_fn, tensors, tol=1e-4, eps=1e-5):
    """Max relative error between analytic and FD gradients over `tensors`."""
    for t in tensors:
        t.zero_grad()
    loss_fn().backward()
    worst = 0.0
    for t in tensors:
        if t.grad is None:
            raise AssertionError("no analytic gradient was accumulated")
        fd = fd_gradient(loss_fn, t, eps)
        scale = max(float(np.abs(fd).max()), float(np.abs(t.grad).max()), 1e-12)
        worst = max(worst, float(np.abs(t.grad - fd).max()) / scale)
    return worst


def _proj(rng, shape):
    return Tensor(rng.standard_normal(shape))


def _loss(out, r):
    return tsum(mul(out, r))


def op_cases(seed=0):
    """name -> (loss_fn, tensors-to-check) for every differentiable op."""
    rng = np.random.default_rng(seed)

    def data(*shape):
        return Tensor(rng.standard_normal(shape), requires_grad=True)

    cases = {}

    a, b = data(3, 4), data(3, 4)
    r = _proj(rng, (3, 4))
    cases["add"] = (lambda: _loss(a + b, r), [a, b])

    c, d = data(3, 4), data(4)
    rmul = _proj(rng, (3, 4))
    cases["mul_broadcast"] = (lambda: _loss(mul(c, d), rmul), [c, d])

    e = data(2, 5)
    e.data += np.sign(e.data) * 0.5  # keep |x| away from the kink
    rabs = _proj(rng, (2, 5))
    cases["abs"] = (lambda: _loss(tabs(e), rabs), [e])

    f = data(4, 6)
    f.data += np.sign(f.data) * 0.5
    rlrelu = _proj(rng, (4, 6))
    cases["leaky_relu"] = (lambda: _loss(leaky_relu(f, 0.1), rlrelu), [f])

    g = data(3, 4, 5)
    rsum = _proj(rng, (3, 5))
    cases["sum_axis"] = (lambda: _loss(tsum(g, axis=1), rsum), [g])
    h = data(3, 4)
    cases["mean"] = (lambda: tmean(mul(h, h)), [h])

    i = data(2, 6)
    rresh = _proj(rng, (3, 4))
    cases["reshape"] = (lambda: _loss(reshape(i, (3, 4)), rresh), [i])
    j = data(2, 3, 4)
    rtrans = _proj(rng, (4, 2, 3))
    cases["transpose"] = (lambda: _loss(transpose(j, (2, 0, 1)), rtrans), [j])
    k = data(2, 3, 4)
    rflip = _proj(rng, (2, 3, 4))
    cases["flip"] = (lambda: _loss(flip(k, (1, 2)), rflip), [k])

    l1, l2 = data(2, 2, 3, 3), data(2, 3, 3, 3)
    rcat = _proj(rng, (2, 5, 3, 3))
    cases["concat"] = (lambda: _loss(concat([l1, l2], 1), rcat), [l1, l2])
    m1, m2 = data(2, 3), data(2, 3)
    rstack = _proj(rng, (2, 2, 3))
    cases["stack"] = (lambda: _loss(stack([m1, m2], 1), rstack), [m1, m2])

    n = data(2, 5, 3)
    rsoft = _proj(rng, (2, 5, 3))
    cases["softmax"] = (lambda: _loss(softmax(n, 1), rsoft), [n])

    p, q = data(2, 8), data(2, 8)
    q.data += 0.3  # keep pred != target so |.| stays smooth
    cases["l1_loss"] = (lambda: l1_loss(p, q), [p])

    x2 = data(2, 3, 5, 7)
    w2 = data(4, 3, 3, 3)
    b2 = data(4)
    r2 = _proj(rng, (4,))

    def conv2d_loss():
        out = conv2d(x2, w2, b2, stride=2, dilation=2, padding=(1, 2))
        return _loss(tmean(out, axis=(0, 2, 3)), r2)

    cases["conv2d"] = (conv2d_loss, [x2, w2, b2])

    x3 = data(1, 2, 4, 5, 4)
    w3 = data(3, 2, 3, 3, 3)
    b3 = data(3)
    r3 = _proj(rng, (3,))

    def conv3d_loss():
        out = conv3d(x3, w3, b3, stride=1, padding=1)
        return _loss(tmean(out, axis=(0, 2, 3, 4)), r3)

    cases["conv3d"] = (conv3d_loss, [x3, w3, b3])

    xbn = data(3, 2, 4, 4)
    gam = Tensor(rng.uniform(0.5, 1.5, 2), requires_grad=True)
    bet = data(2)
    rm = nn.Buffer(np.zeros(2))
    rv = nn.Buffer(np.ones(2))
    rbn = _proj(rng, (3, 2, 4, 4))
    cases["batch_norm_train"] = (
        lambda: _loss(batch_norm(xbn, gam, bet, rm, rv, training=True), rbn),
        [xbn, gam, bet],
    )
    rm2 = nn.Buffer(rng.standard_normal(2) * 0.1)
    rv2 = nn.Buffer(rng.uniform(0.5, 2.0, 2))
    cases["batch_norm_eval"] = (
        lambda: _loss(batch_norm(xbn, gam, bet, rm2, rv2, training=False), rbn),
        [xbn, gam, bet],
    )

    s2 = data(1, 8, 3, 3)
    rs2 = _proj(rng, (1, 2, 6, 6))
    cases["pixel_shuffle_2d"] = (lambda: _loss(pixel_shuffle_2d(s2, 2), rs2), [s2])
    s1 = data(1, 6, 3, 3)
    rs1 = _proj(rng, (1, 2, 3, 9))
    cases["pixel_shuffle_1d"] = (lambda: _loss(pixel_shuffle_1d(s1, 3, "w"), rs1), [s1])
    mv = data(1, 2, 6, 6)
    rmv = _proj(rng, (1, 2, 6, 6))
    cases["macpi_views_roundtrip"] = (
        lambda: _loss(views_to_macpi(macpi_to_views(mv, 3), 3), rmv),
        [mv],
    )
    return cases


def run_gradcheck(tol=1e-4, seed=0, verbose=False):
    """Check every op; returns the list of (name, error) failures."""
    failures = []
    for name, (loss_fn, tensors) in op_cases(seed).items():
        err = check_gradients(loss_fn, tensors, tol=tol)
        status = "ok" if err <= tol else "FAIL"
        if verbose:
            print(f"gradcheck {name:24s} rel err {err:.3e}  {status}")
        if err > tol:
            failures.append((name, err))
    return failures
