from .robot import DynamicsParams, RobotState, reset, step, place_robot, clip_action, motor_torque  # noqa
from .observation import NoiseScales, Proprioception, PrivilegedState, observe  # noqa
from .reward import RewardBreakdown, TERM_WEIGHTS, compute_reward, replay_energy  # noqa
from .termination import Status, check_termination  # noqa
from .randomization import randomize_dynamics  # noqa
from .events import Event, schedule_events  # noqa
from .trajectory import TrajectoryLog, TRAJECTORY_COLUMNS  # noqa
from .env import LeggedEnv, Observation, VecEnv, VecStep  # noqa
