"""Independent reference implementations used to cross-check the library.

Everything here is deliberately written the slow, obvious way (explicit
probability products, all-pairs distances, finite differences) and must stay
independent of the code paths it verifies.
"""

from __future__ import annotations

import math

import numpy as np


def bayes_product_posterior(train_rows, train_labels, alpha, query):
    """Class posteriors by direct Bayes-rule products, no log space.

    Likelihoods are estimated per class with additive smoothing straight from
    the definition, then multiplied out term by term.
    """
    n = len(train_labels)
    n_dims = len(train_rows[0])
    scores = []
    for c in (0, 1):
        members = [row for row, y in zip(train_rows, train_labels) if y == c]
        prior = len(members) / n
        mass = [sum(row[t] for row in members) for t in range(n_dims)]
        total = sum(mass)
        likelihood = [(mass[t] + alpha) / (total + alpha * n_dims) for t in range(n_dims)]
        product = prior
        for t in range(n_dims):
            product *= likelihood[t] ** query[t]
        scores.append(product)
    denom = scores[0] + scores[1]
    return scores[0] / denom, scores[1] / denom


def central_difference_gradient(loss_fn, w, b, h=1e-5):
    """Numerical gradient of loss_fn(w, b) by central differences."""
    grad_w = np.zeros_like(w)
    for i in range(len(w)):
        up = w.copy()
        down = w.copy()
        up[i] += h
        down[i] -= h
        grad_w[i] = (loss_fn(up, b) - loss_fn(down, b)) / (2.0 * h)
    grad_b = (loss_fn(w, b + h) - loss_fn(w, b - h)) / (2.0 * h)
    return grad_w, grad_b


def knn_bruteforce(rows, k):
    """All-pairs Euclidean k nearest neighbors, ties broken by lower index."""
    n = len(rows)
    out = []
    for i in range(n):
        scored = sorted(
            (math.dist(rows[i], rows[j]), j) for j in range(n) if j != i
        )
        out.append([j for _, j in scored[:k]])
    return out


def round_half_up_count(n, fraction, minimum=1):
    """Integer round-half-up of n*fraction using only integer arithmetic."""
    num, den = fraction.as_integer_ratio()
    return max(minimum, (2 * n * num + den) // (2 * den))
