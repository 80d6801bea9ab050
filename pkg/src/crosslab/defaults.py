# dimension contract
PROPRIO_DIM = 45
PRIVILEGED_DIM = 4
TERRAIN_DIM = 187
TERRAIN_LATENT_DIM = 32
LATENT_DIM = TERRAIN_LATENT_DIM + PRIVILEGED_DIM
ACTOR_INPUT_DIM = PROPRIO_DIM + LATENT_DIM
CRITIC_INPUT_DIM = PROPRIO_DIM + PRIVILEGED_DIM + TERRAIN_DIM
ACTION_DIM = 12
NUM_FEET = 4

# timing
CONTROL_DT = 0.02
PHYSICS_DT = 0.005
SUBSTEPS = 4
EPISODE_SECONDS = 20.0

# terrain
TILE_SIZE = 8.0
CELL_SIZE = 0.05
NUM_LEVELS = 10
BORDER_WIDTH = 1.0
START_ZONE = 1.0
SCAN_ROWS = 17
SCAN_COLS = 11

# artifacts
AUTO_CREATE_DIR = None
MANIFEST_FILE = 'manifest.yaml'
METRICS_FILE = 'metrics.csv'
EPISODES_FILE = 'episodes.csv'
CHECKPOINT_FILE = 'checkpoint.bin'

PLANNER_WIRE_VERSION = '1.0'
CHECKPOINT_FORMAT_VERSION = '1.0'
