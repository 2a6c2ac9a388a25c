import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamedit.autodiff import (
    Adam,
    Linear,
    Tensor,
    count_macs,
    default_dtype,
    elementwise,
    gradcheck,
    load_tensor,
    matmul,
    no_grad,
    normalize,
    save_tensor,
    softmax,
)
from streamedit.autodiff import functional as F
from streamedit.autodiff.gradcheck import numerical_grad, random_projection_loss


def t64(rng, *shape, requires_grad=True):
    return Tensor(rng.standard_normal(shape), requires_grad=requires_grad)


# ------------------------------------------------------------------ matmul


def test_matmul_identity():
    b = Tensor([[1.0, 2.0], [3.0, 4.0]])
    out = matmul(Tensor(np.eye(2)), b)
    np.testing.assert_array_equal(out.data, b.data)


def test_matmul_row_times_column():
    out = matmul(Tensor([[1.0, 2.0]]), Tensor([[3.0], [4.0]]))
    assert out.data.tolist() == [[11.0]]


def test_matmul_shape_error_names_shapes():
    with pytest.raises(ValueError, match=r"\(2, 3\).*\(2, 2\)"):
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 2))))


def test_matmul_gradient_matches_central_differences():
    rng = np.random.default_rng(0)
    a, b = t64(rng, 3, 3), t64(rng, 3, 3, requires_grad=False)
    assert gradcheck(lambda: matmul(a, b).sum(), [a]) < 1e-6


def test_matmul_counts_macs():
    with count_macs() as counter:
        matmul(Tensor(np.ones((2, 4, 5))), Tensor(np.ones((5, 3))))
    assert counter.total == 2 * 4 * 5 * 3


# ------------------------------------------------------------------ elementwise


def test_add_zero_is_identity():
    x = Tensor([1.0, -2.0, 3.5])
    np.testing.assert_array_equal(elementwise("add", x, 0.0).data, x.data)


def test_silu_at_zero():
    assert elementwise("silu", Tensor([0.0])).data[0] == 0.0


@pytest.mark.parametrize("op", ["silu", "gelu"])
def test_unary_gradients(op):
    rng = np.random.default_rng(1)
    x = t64(rng, 4, 5)
    assert gradcheck(lambda: elementwise(op, x).sum(), [x]) < 1e-6


@pytest.mark.parametrize("op", ["add", "sub", "mul"])
def test_binary_gradients_with_broadcast(op):
    rng = np.random.default_rng(2)
    a, b = t64(rng, 3, 4), t64(rng, 4)
    w = Tensor(rng.standard_normal((3, 4)))
    assert gradcheck(lambda: (elementwise(op, a, b) * w).sum(), [a, b]) < 1e-6


def test_non_broadcastable_shapes_raise():
    with pytest.raises(ValueError, match="broadcastable"):
        elementwise("add", Tensor(np.ones((2, 3))), Tensor(np.ones((4,))))


def test_unknown_elementwise_op():
    with pytest.raises(ValueError):
        elementwise("pow", Tensor([1.0]))


# ------------------------------------------------------------------ softmax


def test_softmax_uniform_logits():
    out = softmax(Tensor([2.5, 2.5, 2.5]), axis=0)
    np.testing.assert_allclose(out.data, [1 / 3] * 3, rtol=1e-6)


def test_softmax_is_stable_for_large_logits():
    with default_dtype(np.float64):
        out = softmax(Tensor([1000.0, 0.0]), axis=0)
    assert np.all(np.isfinite(out.data))
    assert abs(out.data[0] - 1.0) < 1e-12 and out.data[1] < 1e-12


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(3)
    out = softmax(Tensor(rng.standard_normal((5, 7)) * 10), axis=1)
    assert np.all(out.data > 0) and np.all(out.data < 1)
    np.testing.assert_allclose(out.data.sum(axis=1), 1.0, rtol=1e-6)


def test_softmax_jacobian():
    rng = np.random.default_rng(4)
    x = t64(rng, 3, 6)
    loss = random_projection_loss(lambda: softmax(x, axis=-1), rng)
    assert gradcheck(loss, [x]) < 1e-6


def test_softmax_axis_out_of_range():
    with pytest.raises(ValueError):
        softmax(Tensor(np.ones((2, 2))), axis=2)


# ------------------------------------------------------------------ normalization


def test_rmsnorm_constant_vector():
    out = normalize("rmsnorm", Tensor([2.0, 2.0, 2.0]), axis=0, eps=1e-12)
    np.testing.assert_allclose(out.data, [1.0, 1.0, 1.0], rtol=1e-6)


def test_qk_norm_unit_length():
    v = Tensor(np.array([3.0, -4.0, 12.0]))
    out = normalize("qk_norm", v, axis=0)
    np.testing.assert_allclose(out.data, v.data / 13.0, rtol=1e-9)
    assert abs(np.linalg.norm(out.data) - 1.0) < 1e-6


@pytest.mark.parametrize("kind", ["rmsnorm", "qk_norm"])
def test_normalization_gradients(kind):
    rng = np.random.default_rng(5)
    x = t64(rng, 4, 8)
    loss = random_projection_loss(lambda: normalize(kind, x, axis=-1), rng)
    assert gradcheck(loss, [x]) < 1e-6


def test_normalize_rejects_nonpositive_eps():
    with pytest.raises(ValueError):
        normalize("rmsnorm", Tensor([1.0, 2.0]), eps=0.0)


# ------------------------------------------------------------------ backward


def test_backward_of_sum_is_all_ones():
    x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    x.sum().backward()
    np.testing.assert_array_equal(x.grad, np.ones((2, 3)))


def test_backward_least_squares_matches_hand_derivation():
    rng = np.random.default_rng(6)
    W = t64(rng, 3, 4)
    x = rng.standard_normal((4, 1))
    y = rng.standard_normal((3, 1))
    r = matmul(W, Tensor(x)) - Tensor(y)
    (r * r).sum().backward()
    expected = 2 * (W.data @ x - y) @ x.T
    np.testing.assert_allclose(W.grad, expected, rtol=1e-12)


def test_backward_requires_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ValueError, match="scalar"):
        (x * 2.0).backward()


def test_backward_is_deterministic():
    rng = np.random.default_rng(7)
    x = t64(rng, 5, 5)
    w = Tensor(rng.standard_normal((5, 5)))

    def run():
        x.grad = None
        loss = (softmax(matmul(x, w), axis=-1) * F.gelu(x)).sum()
        loss.backward()
        return x.grad.copy()

    assert np.array_equal(run(), run())


def test_shared_subexpression_accumulates():
    x = Tensor(np.array([1.5, -2.0]), requires_grad=True)
    y = x * x
    (y + y).sum().backward()
    np.testing.assert_allclose(x.grad, 4 * x.data)


def test_no_grad_builds_no_graph():
    x = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        y = x * 2.0
    assert not y.requires_grad and y.is_leaf


def test_tensor_invariants():
    t = Tensor(np.zeros((2, 3)))
    assert t.data.size == int(np.prod(t.shape))
    with pytest.raises(ValueError):
        Tensor(np.zeros((0, 3)))


def test_default_dtype_switch():
    assert Tensor([1.0]).dtype == np.float32
    with default_dtype(np.float64):
        assert Tensor([1.0]).dtype == np.float64


def test_seeded_generation_is_reproducible():
    a = np.random.default_rng(42).standard_normal(10)
    b = np.random.default_rng(42).standard_normal(10)
    assert np.array_equal(a, b)


# ------------------------------------------------------------------ property: every op vs finite differences

OPS = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / (b * b + 1.0),
    "matmul": lambda a, b: matmul(a, b.T),
    "silu": lambda a, b: F.silu(a),
    "gelu": lambda a, b: F.gelu(a),
    "tanh": lambda a, b: F.tanh(a),
    "sigmoid": lambda a, b: F.sigmoid(a),
    "exp": lambda a, b: F.exp(a * 0.5),
    "softmax": lambda a, b: softmax(a, axis=-1),
    "rmsnorm": lambda a, b: F.rmsnorm(a),
    "qk_norm": lambda a, b: F.qk_norm(a),
    "transpose": lambda a, b: a.transpose(),
    "reshape": lambda a, b: a.reshape(-1),
    "getitem": lambda a, b: a[:, 1:3],
    "concat": lambda a, b: F.concat([a, b], axis=0),
    "mean": lambda a, b: a.mean(axis=0),
    "masked_fill": lambda a, b: softmax(F.masked_fill(a, np.tri(3, 4, dtype=bool) == 0, -np.inf), axis=-1),
}


@pytest.mark.parametrize("name", sorted(OPS))
@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_every_op_matches_finite_differences(name, seed):
    rng = np.random.default_rng(seed)
    a, b = t64(rng, 3, 4), t64(rng, 3, 4)
    loss = random_projection_loss(lambda: OPS[name](a, b), rng)
    assert gradcheck(loss, [a, b]) < 1e-5


# ------------------------------------------------------------------ nn + io


def test_adam_reduces_quadratic():
    rng = np.random.default_rng(8)
    layer = Linear(3, 1, rng)
    opt = Adam(layer.parameters(), lr=0.05)
    x = Tensor(rng.standard_normal((32, 3)).astype(np.float32))
    y = Tensor(rng.standard_normal((32, 1)).astype(np.float32))
    losses = []
    for _ in range(100):
        opt.zero_grad()
        r = layer(x) - y
        loss = (r * r).mean()
        loss.backward()
        opt.step()
        losses.append(float(loss.data))
    assert losses[-1] < losses[0]


def test_numerical_grad_restores_inputs():
    x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    before = x.data.copy()
    numerical_grad(lambda: (x * x).sum(), [x])
    assert np.array_equal(x.data, before)


def test_tensor_file_roundtrip(tmp_path):
    arr = np.random.default_rng(9).standard_normal((2, 3, 4)).astype(np.float32)
    path = tmp_path / "a.tensor"
    save_tensor(path, arr)
    raw = path.read_bytes()
    header, _, payload = raw.partition(b"end\n")
    assert b"shape=2,3,4" in header and b"byteorder=little" in header
    assert len(payload) == arr.size * 4
    np.testing.assert_array_equal(load_tensor(path), arr)


def test_tensor_file_rejects_truncated_payload(tmp_path):
    path = tmp_path / "b.tensor"
    save_tensor(path, np.ones((4,), dtype=np.float32))
    path.write_bytes(path.read_bytes()[:-2])
    with pytest.raises(ValueError):
        load_tensor(path)
