"""Toy networks that regress Phong materials and illumination from reflectance maps."""

from .data import ManifestDataset, encode_input, env_target, material_target
from .infer import decode_env, decode_material, infer, load_checkpoint
from .models import (
    ENV_SIZE,
    INPUT_SIZE,
    MATERIAL_DIM,
    IlluminationNet,
    JointNet,
    MaterialNet,
    build_model,
)
from .train import TrainConfig, batch_loss, huber, train

__version__ = "0.1.0"
