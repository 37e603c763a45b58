"""Training objectives: contrastive, view-similarity, and classification.

All losses are built from autodiff primitives and return scalar Values, so a
single backward pass reaches encoder, generator-head, and classifier
parameters at once.
"""

import numpy as np

from . import autodiff as ad
from .errors import DimensionError, DomainError, ParameterError

COSINE_EPS = 1e-12
# additive guard inside the flattened-cosine square root; small enough to
# leave well-scaled inputs bit-identical, large enough to avoid 0/0
FLAT_COSINE_EPS = 1e-24


def normalize_rows(z, eps=COSINE_EPS):
    """Scale each row of a 2-d Value to unit length (eps-guarded).

    The guard inside the square root keeps the backward pass finite for an
    all-zero row (which a zero-bias projection head can emit early in
    training); it is far below rounding for any healthy row.
    """
    z = ad.as_value(z)
    if z.ndim != 2:
        raise DimensionError(f"normalize_rows: need a 2-d embedding matrix, got {z.shape}")
    sq = ad.add(ad.reduce_sum(ad.mul(z, z), axis=1), ad.constant(np.asarray(FLAT_COSINE_EPS)))
    inv = ad.add(sq.sqrt(), ad.constant(np.asarray(eps))) ** -1.0
    return ad.scale_rows(z, inv)


def _pair_losses(z, tau):
    """Per-row contrastive losses for interleaved positive pairs.

    Row 2k and row 2k+1 are the two views of graph k; every other row in the
    batch acts as a negative.  Returns an (M,) Value.
    """
    z = ad.as_value(z)
    if z.ndim != 2:
        raise DimensionError(f"expected a 2-d embedding matrix, got {z.shape}")
    m = z.shape[0]
    if m % 2 != 0:
        raise DimensionError(f"interleaved views require an even row count, got {m}")
    if tau <= 0:
        raise ParameterError(f"temperature must be > 0, got {tau}")
    zn = normalize_rows(z)
    sims = ad.matmul(zn, ad.transpose(zn))
    scaled = sims * (1.0 / tau)
    off_diagonal = ad.constant(1.0 - np.eye(m))
    denom = ad.log(ad.reduce_sum(ad.mul(scaled.exp(), off_diagonal), axis=1))
    partner = np.zeros((m, m))
    partner[np.arange(m), np.arange(m) ^ 1] = 1.0
    pos = ad.reduce_sum(ad.mul(scaled, ad.constant(partner)), axis=1)
    return ad.sub(denom, pos)


def nt_xent(z, tau=0.2):
    """Normalized-temperature cross entropy over interleaved view pairs.

    ``z`` has rows [view1 of graph 0, view2 of graph 0, view1 of graph 1, ...].
    Needs at least two pairs; with a single pair there are no negatives and
    the objective is identically zero.
    """
    z = ad.as_value(z)
    if z.ndim == 2 and z.shape[0] < 4:
        raise ParameterError(
            f"contrastive batch needs at least two pairs (4 rows), got {z.shape[0]}"
        )
    return ad.reduce_mean(_pair_losses(z, tau))


def _flat_cosine(a, b):
    num = ad.reduce_sum(ad.mul(a, b))
    den = ad.add(
        ad.mul(ad.reduce_sum(ad.mul(a, a)), ad.reduce_sum(ad.mul(b, b))),
        ad.constant(np.asarray(FLAT_COSINE_EPS)),
    ).sqrt()
    return ad.div(num, den)


def similarity_loss(view_a, view_b):
    """How alike two augmented views of the same graph are.

    Cosine agreement of the relaxed strategy matrices plus cosine agreement
    of the relaxed adjacencies.  Minimizing the total objective therefore
    pushes the two views toward distinct augmentations.  Identical views
    score exactly 2.
    """
    if view_a.soft_state.shape != view_b.soft_state.shape:
        raise DimensionError(
            f"strategy matrices disagree: {view_a.soft_state.shape} vs {view_b.soft_state.shape}"
        )
    if view_a.soft_adjacency.shape != view_b.soft_adjacency.shape:
        raise DimensionError(
            f"adjacencies disagree: {view_a.soft_adjacency.shape} vs {view_b.soft_adjacency.shape}"
        )
    return ad.add(
        _flat_cosine(view_a.soft_state, view_b.soft_state),
        _flat_cosine(view_a.soft_adjacency, view_b.soft_adjacency),
    )


def cross_entropy(logits, labels):
    """Mean negative log-likelihood of integer labels under softmax logits."""
    logits = ad.as_value(logits)
    if logits.ndim != 2:
        raise DimensionError(f"logits must be 2-d, got {logits.shape}")
    labels = np.asarray(labels, dtype=np.int64)
    b, c = logits.shape
    if labels.shape != (b,):
        raise DimensionError(f"labels {labels.shape} do not match {b} logit rows")
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise DomainError(f"labels must lie in [0, {c}), got range "
                          f"[{labels.min()}, {labels.max()}]")
    onehot = np.zeros((b, c))
    onehot[np.arange(b), labels] = 1.0
    log_p = ad.log(ad.softmax(logits))
    return ad.neg(ad.reduce_mean(ad.reduce_sum(ad.mul(log_p, ad.constant(onehot)), axis=1)))


def accuracy(logits, labels):
    """Fraction of rows whose argmax matches the label (plain numpy)."""
    pred = np.argmax(np.asarray(logits), axis=1)
    labels = np.asarray(labels)
    if pred.shape != labels.shape:
        raise DimensionError(f"predictions {pred.shape} vs labels {labels.shape}")
    return float(np.mean(pred == labels)) if labels.size else 0.0
