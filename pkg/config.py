"""
Balls-in-Bins Feedback Simulator - Configuration
"""

import os
from dotenv import load_dotenv

load_dotenv()

TOOL_VERSION = "0.3.0"

# Output
# Default directory for CSV/JSON artifacts and run manifests
OUTPUT_DIR = os.getenv("BALLS_OUTPUT_DIR", "output")
FIGURES_DIR = os.getenv("BALLS_FIGURES_DIR", "figures")

# Logging
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("LOG_FILE", "")

# Processing Configuration
MAX_WORKERS = int(os.getenv("MAX_WORKERS", "1"))

# Discrete model
SIM_CHUNK_SIZE = int(os.getenv("SIM_CHUNK_SIZE", str(2 ** 20)))
TREE_REBUILD_INTERVAL = int(os.getenv("TREE_REBUILD_INTERVAL", str(2 ** 26)))
TREE_DRIFT_TOLERANCE = float(os.getenv("TREE_DRIFT_TOLERANCE", "1e-9"))
WEIGHT_RESCALE_THRESHOLD = 1e300
# Runs beyond this many iterations need --unbounded
UNBOUNDED_ITERATIONS = int(os.getenv("UNBOUNDED_ITERATIONS", str(10 ** 8)))

# Continuous-time process
DEFAULT_OMEGA_MAX = int(os.getenv("DEFAULT_OMEGA_MAX", str(10 ** 4)))
DEFAULT_N_SIMS = int(os.getenv("DEFAULT_N_SIMS", str(10 ** 4)))
HOLDING_BLOCK_MIN = 32
HOLDING_BLOCK_MAX = 65536

# Master equation
BREAKDOWN_LOWER = -1e-6
BREAKDOWN_UPPER = 1.0 + 1e-6
BREAKDOWN_CANCELLATION = 1e12
ROW_SUM_TOLERANCE = 1e-8
DEFAULT_PMF_OMEGA_MAX = int(os.getenv("DEFAULT_PMF_OMEGA_MAX", "300"))

# ODE oracle
ODE_METHOD = os.getenv("ODE_METHOD", "DOP853")
ODE_RTOL = float(os.getenv("ODE_RTOL", "1e-10"))
ODE_ATOL = float(os.getenv("ODE_ATOL", "1e-14"))
ODE_MAX_OMEGA = int(os.getenv("ODE_MAX_OMEGA", "20000"))
