from .buffer import RolloutBuffer, compute_gae, gae, normalize_advantages  # noqa
from .actor_critic import ActorCritic, PolicyStep  # noqa
from .rollout import RolloutSession, collect_rollouts  # noqa
from .algorithm import PPO, update, adapt_learning_rate, surrogate_loss  # noqa
