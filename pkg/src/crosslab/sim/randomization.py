from __future__ import annotations

import numpy as np

from crosslab.sim.robot import DynamicsParams
from crosslab.utils.seeding import rng_from_seed


def randomize_dynamics(base_params, seed: int) -> DynamicsParams:
    '''
    Draw one episode's dynamics uniformly from the configured ranges

    Names listed in ``base_params.disabled_randomizations`` keep their
    nominal value: no added mass, centred CoM, unit friction and strength,
    nominal joints and a base at rest.

    :param base_params: an ``EnvConfig`` (or anything with its range keys).
    '''
    rng = rng_from_seed(seed)
    disabled = set(base_params.disabled_randomizations)

    def draw(name, bounds, nominal):
        value = rng.uniform(bounds[0], bounds[1])
        return nominal if name in disabled else float(value)

    added_mass = draw('added_mass', base_params.added_mass, 0.0)
    com = np.array([rng.uniform(*base_params.com_x), rng.uniform(*base_params.com_y),
                    rng.uniform(*base_params.com_z)])
    if 'com_offset' in disabled:
        com = np.zeros(3)
    friction = draw('friction', base_params.friction, 1.0)
    strength = draw('motor_strength', base_params.motor_strength, 1.0)
    joint_scale = (1.0, 1.0) if 'init_joint_scale' in disabled else tuple(base_params.init_joint_scale)
    base_vel = (0.0, 0.0) if 'init_base_vel' in disabled else tuple(base_params.init_base_vel)
    return DynamicsParams(
        added_mass=added_mass,
        com_offset=com,
        friction=friction,
        motor_strength=strength,
        kp=base_params.kp,
        kd=base_params.kd,
        init_joint_scale=joint_scale,
        init_base_vel=base_vel,
        gravity=base_params.gravity,
        contact_stiffness=base_params.contact_stiffness,
        contact_damping=base_params.contact_damping,
    )
