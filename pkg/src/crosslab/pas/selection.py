from __future__ import annotations

import numpy as np

from crosslab import defaults
from crosslab.exceptions import InvalidInputError
from crosslab.utils.seeding import rng_from_seed


def selection_draw(probability: float, env_id: int, episode_seed: int) -> bool:
    '''
    One Bernoulli draw deciding whether an episode uses the true latent
    '''
    if not 0.0 <= probability <= 1.0:
        raise InvalidInputError(f"probability must be in [0, 1], got {probability}")
    return bool(rng_from_seed(episode_seed, env_id).random() < probability)


def probability_select(predicted, true_latent, probability: float, env_id: int, episode_seed: int) -> np.ndarray:
    '''
    Pick the latent an environment feeds its low-level policy

    The draw depends only on ``(episode_seed, env_id)``, so every step of
    one episode gets the same source.
    '''
    predicted = np.asarray(predicted, dtype=np.float64)
    true_latent = np.asarray(true_latent, dtype=np.float64)
    if predicted.shape[-1] != defaults.LATENT_DIM or true_latent.shape[-1] != defaults.LATENT_DIM:
        raise InvalidInputError(f"latents must have {defaults.LATENT_DIM} entries")
    return true_latent.copy() if selection_draw(probability, env_id, episode_seed) else predicted.copy()
