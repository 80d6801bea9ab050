from .tensor import Tensor, GradientTape, backward  # noqa
from .layers import (  # noqa
    NetworkSpec,
    Network,
    build_network,
    forward_mlp,
    forward_lstm,
    forward_conv1d,
    lstm_zero_state,
    spec_hash,
)
from .optim import Adam, optimizer_step, clip_by_global_norm, global_norm  # noqa
from .checkpoint import Checkpoint, save_checkpoint, load_checkpoint, encode_checkpoint, decode_checkpoint  # noqa
