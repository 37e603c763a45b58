"""Reverse-mode automatic differentiation over dense float64 arrays.

A ``Value`` wraps an ndarray together with the operation that produced it and
references to its parents, forming a DAG.  ``backward`` walks the DAG once in
reverse topological order, evaluates each node's vector-Jacobian product, and
accumulates gradients with ``+=`` into every reachable ``Value`` that has
``requires_grad`` set.  VJPs are pure functions of the incoming gradient, so
calling ``backward`` twice without ``zero_grad`` exactly doubles every grad.

The DAG is a per-computation record: building and differentiating one is
single threaded, but independent records may live on different threads since
there is no module-level mutable state (random draws always come from an
explicitly passed generator).

Scalars are shape ``()`` arrays.  Elementwise ops require equal shapes or one
scalar operand; there is no general broadcasting.
"""

import numpy as np

from .errors import ContractError, DimensionError, DomainError, ParameterError

LOG_CLAMP = 1e-12
UNIFORM_CLAMP = 1e-12

PARAM_FORMAT = "subgcl-params-v1"


class Value:
    """One node of a reverse-mode computation record.

    Attributes:
        data: float64 ndarray holding the forward value.
        grad: accumulated gradient (ndarray of the same shape) or None.
        requires_grad: whether gradients flow to or through this node.
        op: short operation identifier, "leaf" for inputs.
    """

    __slots__ = ("_data", "grad", "requires_grad", "op", "_parents", "_vjp")

    def __init__(self, data, requires_grad=False, op="leaf", parents=(), vjp=None):
        self._data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.op = op
        self._parents = tuple(parents)
        self._vjp = vjp

    @property
    def data(self):
        return self._data

    @data.setter
    def data(self, new):
        # assignments like `v.data = v.data + delta` on 0-d values produce
        # numpy scalars; coerce so data is always a float64 ndarray
        self._data = np.asarray(new, dtype=np.float64)

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __repr__(self):
        return f"Value(op={self.op!r}, shape={self.data.shape}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def detach(self):
        """A constant copy sharing the forward data, cut out of the record."""
        return Value(self.data, op="detach")

    # -- operator sugar -------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, exponent):
        return powc(self, exponent)

    def relu(self):
        return relu(self)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)

    def sqrt(self):
        return powc(self, 0.5)


def as_value(x):
    """Wrap plain numbers/arrays as constant Values; pass Values through."""
    if isinstance(x, Value):
        return x
    return Value(np.asarray(x, dtype=np.float64), op="const")


def constant(x):
    return Value(np.asarray(x, dtype=np.float64), op="const")


def _compose(data, op, parents, vjp):
    rg = any(p.requires_grad for p in parents)
    if not rg:
        return Value(data, op=op)
    return Value(data, requires_grad=True, op=op, parents=parents, vjp=vjp)


def _check_elementwise(a, b, opname):
    if a.shape == b.shape or a.ndim == 0 or b.ndim == 0:
        return
    raise DimensionError(
        f"{opname}: shapes {a.shape} and {b.shape} must match or one operand must be scalar"
    )


def _unbroadcast(g, shape):
    # Reduces a gradient back to a scalar operand's shape.
    if g.shape == shape:
        return g
    return np.sum(g).reshape(shape)


# -- elementwise arithmetic --------------------------------------------


def add(a, b):
    a, b = as_value(a), as_value(b)
    _check_elementwise(a, b, "add")

    def vjp(g):
        return [_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)]

    return _compose(a.data + b.data, "add", (a, b), vjp)


def sub(a, b):
    a, b = as_value(a), as_value(b)
    _check_elementwise(a, b, "sub")

    def vjp(g):
        return [_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)]

    return _compose(a.data - b.data, "sub", (a, b), vjp)


def mul(a, b):
    a, b = as_value(a), as_value(b)
    _check_elementwise(a, b, "mul")

    def vjp(g):
        return [_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)]

    return _compose(a.data * b.data, "mul", (a, b), vjp)


def div(a, b):
    a, b = as_value(a), as_value(b)
    _check_elementwise(a, b, "div")

    def vjp(g):
        return [
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        ]

    return _compose(a.data / b.data, "div", (a, b), vjp)


def neg(a):
    a = as_value(a)

    def vjp(g):
        return [-g]

    return _compose(-a.data, "neg", (a,), vjp)


def powc(a, exponent):
    """Elementwise power with a constant float exponent."""
    a = as_value(a)
    e = float(exponent)

    def vjp(g):
        return [g * e * np.power(a.data, e - 1.0)]

    return _compose(np.power(a.data, e), "pow", (a,), vjp)


def relu(a):
    a = as_value(a)
    mask = a.data > 0.0

    def vjp(g):
        return [g * mask]

    return _compose(np.where(mask, a.data, 0.0), "relu", (a,), vjp)


def exp(a):
    a = as_value(a)
    out = np.exp(a.data)

    def vjp(g):
        return [g * out]

    return _compose(out, "exp", (a,), vjp)


def log(a):
    """Natural log, input clamped below at 1e-12 to stay finite."""
    a = as_value(a)
    clamped = np.maximum(a.data, LOG_CLAMP)

    def vjp(g):
        return [g / clamped]

    return _compose(np.log(clamped), "log", (a,), vjp)


# -- linear algebra ----------------------------------------------------


def matmul(a, b):
    a, b = as_value(a), as_value(b)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"matmul: operands must be 2-d, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: inner dimensions disagree, {a.shape} @ {b.shape}")

    def vjp(g):
        return [g @ b.data.T, a.data.T @ g]

    return _compose(a.data @ b.data, "matmul", (a, b), vjp)


def transpose(a):
    a = as_value(a)
    if a.ndim != 2:
        raise DimensionError(f"transpose: operand must be 2-d, got {a.shape}")

    def vjp(g):
        return [g.T.copy()]

    return _compose(a.data.T.copy(), "transpose", (a,), vjp)


def reshape(a, shape):
    a = as_value(a)
    shape = tuple(int(s) for s in shape)
    orig = a.data.shape

    def vjp(g):
        return [g.reshape(orig)]

    return _compose(a.data.reshape(shape), "reshape", (a,), vjp)


def add_bias(x, b):
    """Add a length-n bias row to every row of an (m, n) matrix."""
    x, b = as_value(x), as_value(b)
    if x.ndim != 2 or b.ndim != 1 or x.shape[1] != b.shape[0]:
        raise DimensionError(f"add_bias: got {x.shape} and {b.shape}")

    def vjp(g):
        return [g, g.sum(axis=0)]

    return _compose(x.data + b.data[None, :], "add_bias", (x, b), vjp)


def scale_rows(x, w):
    """Scale row i of an (m, n) matrix by w[i]."""
    x, w = as_value(x), as_value(w)
    if x.ndim != 2 or w.ndim != 1 or x.shape[0] != w.shape[0]:
        raise DimensionError(f"scale_rows: got {x.shape} and {w.shape}")

    def vjp(g):
        return [g * w.data[:, None], (g * x.data).sum(axis=1)]

    return _compose(x.data * w.data[:, None], "scale_rows", (x, w), vjp)


def concat(parts, axis=0):
    parts = [as_value(p) for p in parts]
    if not parts:
        raise DimensionError("concat: need at least one part")
    if len(parts) == 1:
        return parts[0]
    nd = parts[0].ndim
    for p in parts[1:]:
        if p.ndim != nd:
            raise DimensionError(
                f"concat: ranks disagree, {parts[0].shape} vs {p.shape}"
            )
        for ax in range(nd):
            if ax != axis and p.shape[ax] != parts[0].shape[ax]:
                raise DimensionError(
                    f"concat: shapes {parts[0].shape} and {p.shape} disagree off axis {axis}"
                )
    sizes = [p.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        return [
            np.take(g, np.arange(offsets[i], offsets[i + 1]), axis=axis)
            for i in range(len(parts))
        ]

    return _compose(
        np.concatenate([p.data for p in parts], axis=axis), "concat", tuple(parts), vjp
    )


def gather_rows(x, indices):
    """Select rows (2-d) or elements (1-d) by an integer index array.

    Repeated indices are allowed; the backward pass scatter-adds.
    """
    x = as_value(x)
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 1:
        raise DimensionError(f"gather_rows: index array must be 1-d, got {idx.shape}")
    if x.ndim not in (1, 2):
        raise DimensionError(f"gather_rows: operand must be 1-d or 2-d, got {x.shape}")
    n = x.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise DomainError(f"gather_rows: index out of range for {n} rows")

    def vjp(g):
        z = np.zeros_like(x.data)
        np.add.at(z, idx, g)
        return [z]

    return _compose(x.data[idx], "gather_rows", (x,), vjp)


# -- reductions --------------------------------------------------------


def _check_extent(x, axis, opname):
    if axis is None:
        if x.data.size == 0:
            raise DomainError(f"{opname}: empty reduction extent")
    else:
        if x.shape[axis] == 0:
            raise DomainError(f"{opname}: empty reduction extent along axis {axis}")


def reduce_sum(x, axis=None, keepdims=False):
    x = as_value(x)
    _check_extent(x, axis, "reduce_sum")

    def vjp(g):
        if axis is None:
            return [np.broadcast_to(g, x.shape).copy()]
        gg = g if keepdims else np.expand_dims(g, axis)
        return [np.broadcast_to(gg, x.shape).copy()]

    return _compose(np.sum(x.data, axis=axis, keepdims=keepdims), "reduce_sum", (x,), vjp)


def reduce_mean(x, axis=None, keepdims=False):
    x = as_value(x)
    _check_extent(x, axis, "reduce_mean")
    n = x.data.size if axis is None else x.shape[axis]

    def vjp(g):
        if axis is None:
            return [np.broadcast_to(g / n, x.shape).copy()]
        gg = g if keepdims else np.expand_dims(g, axis)
        return [np.broadcast_to(gg / n, x.shape).copy()]

    return _compose(np.mean(x.data, axis=axis, keepdims=keepdims), "reduce_mean", (x,), vjp)


def reduce_max(x, axis=None, keepdims=False):
    """Max reduction; gradient routes to the lowest-index maximiser on ties."""
    x = as_value(x)
    _check_extent(x, axis, "reduce_max")
    if axis is None:
        flat = int(np.argmax(x.data))
        mask = np.zeros_like(x.data)
        mask.reshape(-1)[flat] = 1.0
    else:
        am = np.argmax(x.data, axis=axis)
        mask = np.zeros_like(x.data)
        np.put_along_axis(mask, np.expand_dims(am, axis), 1.0, axis=axis)

    def vjp(g):
        if axis is None:
            return [mask * g]
        gg = g if keepdims else np.expand_dims(g, axis)
        return [mask * gg]

    return _compose(np.max(x.data, axis=axis, keepdims=keepdims), "reduce_max", (x,), vjp)


# -- softmax family ----------------------------------------------------


def softmax(x, temperature=1.0):
    """Softmax over the last axis of a 1-d or 2-d input.

    ``temperature`` divides the logits; it must be strictly positive.  The
    forward pass subtracts the row max before exponentiating.
    """
    x = as_value(x)
    t = float(temperature)
    if t <= 0.0:
        raise ParameterError(f"softmax: temperature must be > 0, got {t}")
    if x.ndim not in (1, 2):
        raise DimensionError(f"softmax: operand must be 1-d or 2-d, got {x.shape}")
    if x.shape[-1] == 0:
        raise DomainError("softmax: empty category axis")
    z = x.data / t
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    out = e / np.sum(e, axis=-1, keepdims=True)

    def vjp(g):
        dot = np.sum(g * out, axis=-1, keepdims=True)
        return [(g - dot) * out / t]

    return _compose(out, "softmax", (x,), vjp)


def sample_gumbel_softmax(logits, temperature, rng):
    """Gumbel-softmax relaxation: softmax((logits + gumbel noise) / temperature).

    Noise is g = -log(-log(u)) with u uniform, clamped to
    [1e-12, 1 - 1e-12].  Rows of a 2-d input are perturbed independently.
    Returns the soft (simplex-valued) sample as a differentiable Value.
    """
    logits = as_value(logits)
    t = float(temperature)
    if t <= 0.0:
        raise ParameterError(f"gumbel_softmax: temperature must be > 0, got {t}")
    u = np.clip(rng.random(logits.shape), UNIFORM_CLAMP, 1.0 - UNIFORM_CLAMP)
    noise = -np.log(-np.log(u))
    return softmax(add(logits, constant(noise)), temperature=t)


def straight_through_onehot(soft, indices=None):
    """Discretise simplex rows to one-hot, keeping the soft gradient.

    Forward emits exact one-hot vectors (argmax by default, lowest index on
    ties; ``indices`` overrides the chosen category per row).  Backward passes
    the incoming gradient through to ``soft`` unchanged.
    """
    soft = as_value(soft)
    if soft.ndim not in (1, 2):
        raise DimensionError(f"straight_through_onehot: operand must be 1-d or 2-d, got {soft.shape}")
    n = soft.shape[-1]
    if indices is None:
        idx = np.argmax(soft.data, axis=-1)
    else:
        idx = np.asarray(indices, dtype=np.int64)
    hard = np.zeros_like(soft.data)
    if soft.ndim == 1:
        hard[int(idx)] = 1.0
    else:
        hard[np.arange(soft.shape[0]), idx] = 1.0

    def vjp(g):
        return [g]

    return _compose(hard, "st_onehot", (soft,), vjp)


def gumbel_softmax(logits, temperature, hard, rng):
    """Sample a Gumbel-softmax vector, optionally discretised straight-through."""
    soft = sample_gumbel_softmax(logits, temperature, rng)
    if hard:
        return straight_through_onehot(soft)
    return soft


# -- graph-shaped scatter ----------------------------------------------


def adjacency_from_edges(weights, us, vs, num_nodes):
    """Scatter per-edge weights into a symmetric dense (n, n) adjacency.

    ``us``/``vs`` are equal-length int arrays of endpoints; entries (u, v) and
    (v, u) both receive the edge weight, and repeated pairs accumulate.
    Backward maps grad[u, v] + grad[v, u] to each weight.
    """
    w = as_value(weights)
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    n = int(num_nodes)
    if w.ndim != 1 or us.shape != w.shape or vs.shape != w.shape:
        raise DimensionError(
            f"adjacency_from_edges: weights {w.shape}, endpoints {us.shape}/{vs.shape}"
        )
    if us.size:
        if us.min() < 0 or vs.min() < 0 or us.max() >= n or vs.max() >= n:
            raise DomainError(f"adjacency_from_edges: endpoint out of range for n={n}")
        if np.any(us == vs):
            raise ContractError("adjacency_from_edges: self loop in edge list")
    out = np.zeros((n, n), dtype=np.float64)
    np.add.at(out, (us, vs), w.data)
    np.add.at(out, (vs, us), w.data)

    def vjp(g):
        return [g[us, vs] + g[vs, us]]

    return _compose(out, "adjacency_from_edges", (w,), vjp)


# -- backward pass -----------------------------------------------------


def backward(root):
    """Reverse-mode sweep from a scalar root.

    Accumulates (+=) into ``grad`` of every reachable Value with
    ``requires_grad``.  Raises ContractError for a non-scalar root.
    """
    if root.data.shape != ():
        raise ContractError(f"backward: root must be scalar, got shape {root.data.shape}")
    if not root.requires_grad:
        return

    # Iterative DFS postorder; children precede parents in `topo`.
    topo = []
    visited = set()
    stack = [(root, False)]
    while stack:
        v, expanded = stack.pop()
        if expanded:
            topo.append(v)
            continue
        if v in visited:
            continue
        visited.add(v)
        stack.append((v, True))
        for p in v._parents:
            if p.requires_grad and p not in visited:
                stack.append((p, False))

    local = {root: np.ones((), dtype=np.float64)}
    for v in reversed(topo):
        g = local.pop(v, None)
        if g is None:
            continue
        v.grad = np.array(g, copy=True) if v.grad is None else v.grad + g
        if v._vjp is None:
            continue
        for p, pg in zip(v._parents, v._vjp(g)):
            if pg is None or not p.requires_grad:
                continue
            acc = local.get(p)
            local[p] = pg if acc is None else acc + pg


# -- parameters --------------------------------------------------------


class Parameter:
    """A named trainable leaf."""

    __slots__ = ("name", "value")

    def __init__(self, name, data):
        self.name = name
        self.value = Value(np.asarray(data, dtype=np.float64), requires_grad=True, op=f"param:{name}")


class ParameterStore:
    """Ordered registry of named parameters with JSON (de)serialisation.

    Names must be unique; registration order is preserved so optimiser state
    and serialised checkpoints line up deterministically.
    """

    def __init__(self):
        self._params: dict[str, Parameter] = {}

    def add(self, name, data):
        if name in self._params:
            raise ParameterError(f"duplicate parameter name: {name!r}")
        p = Parameter(name, data)
        self._params[name] = p
        return p.value

    def __contains__(self, name):
        return name in self._params

    def __getitem__(self, name):
        return self._params[name].value

    def __len__(self):
        return len(self._params)

    def names(self):
        return list(self._params)

    def values(self):
        return [p.value for p in self._params.values()]

    def items(self):
        return [(p.name, p.value) for p in self._params.values()]

    def zero_grad(self):
        for p in self._params.values():
            p.value.grad = None

    def num_entries(self):
        return sum(p.value.data.size for p in self._params.values())

    def state_dict(self):
        """Versioned name -> {shape, row-major data} map, JSON serialisable."""
        return {
            "format": PARAM_FORMAT,
            "params": {
                name: {
                    "shape": list(p.value.data.shape),
                    "data": [float(x) for x in p.value.data.reshape(-1)],
                }
                for name, p in self._params.items()
            },
        }

    def load_state_dict(self, state):
        if state.get("format") != PARAM_FORMAT:
            raise ParameterError(f"unknown parameter format: {state.get('format')!r}")
        entries = state.get("params", {})
        if set(entries) != set(self._params):
            missing = set(self._params) - set(entries)
            extra = set(entries) - set(self._params)
            raise ParameterError(
                f"parameter name mismatch (missing {sorted(missing)}, unexpected {sorted(extra)})"
            )
        for name, p in self._params.items():
            e = entries[name]
            shape = tuple(int(s) for s in e["shape"])
            if shape != p.value.data.shape:
                raise DimensionError(
                    f"parameter {name!r}: stored shape {shape} != expected {p.value.data.shape}"
                )
            p.value.data = np.asarray(e["data"], dtype=np.float64).reshape(shape)
            p.value.grad = None
