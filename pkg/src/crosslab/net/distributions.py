from __future__ import annotations

import math

import numpy as np

from crosslab.net import tensor as T

LOG_2PI = math.log(2.0 * math.pi)


def log_prob(mean, log_std, actions):
    '''
    Log density of a diagonal Gaussian, summed over the last axis
    '''
    z = T.div(T.sub(actions, mean), T.exp(log_std))
    per_dim = T.add(T.add(T.mul(T.square(z), 0.5), log_std), 0.5 * LOG_2PI)
    return T.mul(T.reduce_sum(per_dim, axis=-1), -1.0)


def entropy(log_std):
    return T.reduce_sum(T.add(log_std, 0.5 * (LOG_2PI + 1.0)), axis=-1)


def kl_divergence(mean_old, log_std_old, mean_new, log_std_new) -> np.ndarray:
    '''
    KL(old || new) per row for diagonal Gaussians, on plain arrays
    '''
    var_old = np.exp(2.0 * log_std_old)
    var_new = np.exp(2.0 * log_std_new)
    per_dim = (log_std_new - log_std_old
               + (var_old + (mean_old - mean_new) ** 2) / (2.0 * var_new) - 0.5)
    return np.sum(per_dim, axis=-1)


def sample(mean: np.ndarray, log_std: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return mean + np.exp(log_std) * rng.standard_normal(np.shape(mean))
