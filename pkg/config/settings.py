"""
config/settings.py
==================
Central configuration. Defaults can be overridden from the environment or a .env file.
"""

import os
from dotenv import load_dotenv # type: ignore

load_dotenv()

# ── Output ────────────────────────────────────────────────────────────────────
OUTPUT_DIR = os.getenv("BEAMCOUPLE_OUTPUT_DIR", "results")  # CSV files land here

# ── Newton solver ─────────────────────────────────────────────────────────────
NEWTON_TOL = float(os.getenv("BEAMCOUPLE_NEWTON_TOL", "1e-10"))
NEWTON_MAX_ITER = int(os.getenv("BEAMCOUPLE_NEWTON_MAX_ITER", "25"))
INCREMENT_TOL = float(os.getenv("BEAMCOUPLE_INCREMENT_TOL", "1e-9"))
MAX_STEP_CUTS = int(os.getenv("BEAMCOUPLE_MAX_STEP_CUTS", "4"))

# ── Linear solver ─────────────────────────────────────────────────────────────
DENSE_LIMIT = int(os.getenv("BEAMCOUPLE_DENSE_LIMIT", "2000"))  # below this many DOFs: dense LU

# ── Scenario defaults (desk scale; larger meshes via CLI flags) ──────────────
L_SHAPE_ELEMENTS = 10
CONVERGENCE_REFERENCE_ELEMENTS = 512
CONVERGENCE_MAX_K = 7
OBJECTIVITY_ELEMENTS = 9
OBJECTIVITY_LOADING_STEPS = 10
OBJECTIVITY_ROTATION_STEPS = 50
CYLINDER_ELEMS_PER_AXIAL = 8
CYLINDER_ELEMS_PER_RING = 12
CYLINDER_ORDER = 2
CYLINDER_STEPS = 100
PENALTY_SCALES = [1.0, 10.0, 100.0, 1000.0]

# ── Logging ───────────────────────────────────────────────────────────────────
LOG_LEVEL = os.getenv("BEAMCOUPLE_LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("BEAMCOUPLE_LOG_FILE", "logs/beamcouple.log")
