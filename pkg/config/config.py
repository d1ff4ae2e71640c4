"""
System-wide configuration constants for shaderfuzz.

These are DEFAULT values used for initialization. Many can be overridden
per campaign via CLI flags or a campaign .cfg file (see campaign_config.py).

Do NOT store runtime state here - this module only defines initial defaults.
"""

# ============================================================================
# Coverage Map
# ============================================================================
MAP_SIZE = 1 << 16  # byte counters shared with the system under test
# Upper bound (inclusive) of each AFL-style hit-count bucket
BUCKET_BOUNDS = (1, 2, 3, 7, 15, 31, 127, 255)
# Environment variable carrying the shared-memory object name for external targets
SHM_ENV_VAR = '__AFL_SHM_ID'
SHM_DIR = '/dev/shm'  # falls back to the temp dir when missing

# ============================================================================
# AST Layer
# ============================================================================
MAX_AST_NODES = 50_000  # node cap after any mutation
MAX_AST_DEPTH = 200  # nesting cap after any mutation
RECURSIVE_REPLACE_BUDGET = 3  # max self-insertions per RecursiveReplace
AST_MUTATION_RETRIES = 16  # rejected (cap-violating) mutations retried this often
MAX_SOURCE_BYTES = 1 << 20  # parse() refuses larger inputs

# ============================================================================
# Reference Validator
# ============================================================================
MAX_PARSE_NESTING = 256  # deeper nesting is a limit-error
MAX_IDENTIFIER_LENGTH = 1024  # longer identifiers are a limit-error
PARSER_RECURSION_LIMIT = 20_000  # interpreter recursion limit while parsing/checking

# ============================================================================
# IR Layer
# ============================================================================
IR_MUTATION_RETRIES = 16  # bounded retries for rejected IR mutations
GENERATION_STALL_LIMIT = 64  # failed sampling attempts before closing a function
DEFAULT_MAX_TYPES = 6
DEFAULT_MAX_FUNCTIONS = 3
DEFAULT_MAX_STATEMENTS = 16
DEFAULT_MAX_GLOBALS = 3
MAX_ARRAY_LENGTH = 16
MAX_BLOCK_DEPTH = 3  # nesting of if/loop/switch emitted by the generator

# ============================================================================
# Engine
# ============================================================================
STABILITY_REPEATS = 5  # executions per stable-novel-edge check
EXEC_TIMEOUT = 2.0  # seconds per execution
MAX_OUTPUT_BYTES = 1 << 20  # lifted/unparsed text larger than this is skipped
STACK_MIN = 1  # mutation stacking bounds (geometric, p=STACK_P)
STACK_MAX = 8
STACK_P = 0.5
EXPLORATION_FLOOR = 0.05  # minimum share of uniform operator choice
MINIMIZE_MAX_EXECS = 100  # keep-predicate executions per minimization
CALIBRATION_RATIO = 2.0  # minimization runs allowed per candidate execution, campaign-wide
DEFAULT_GENERATOR_COUNT = 100

# ============================================================================
# Stats
# ============================================================================
STATS_INTERVAL_S = 2.0  # seconds between stats records
STATS_INTERVAL_EXECS = 1000  # or this many executions, whichever first
STATS_FILE_NAME = 'stats.txt'
REPORT_FILE_NAME = 'report.txt'
EDGES_FILE_NAME = 'edges.csv'
CONFIG_ECHO_FILE_NAME = 'campaign.cfg'

# ============================================================================
# Corpus Sidecar
# ============================================================================
SIDECAR_MAGIC = b'WGFZ'
SIDECAR_VERSION = 1

# ============================================================================
# Queue Configuration (multi-instance mode)
# ============================================================================
QUEUE_SIZE_STATUS = 100
QUEUE_SIZE_LOG = 200
QUEUE_PUT_TIMEOUT = 0.1  # seconds
QUEUE_GET_TIMEOUT = 0.5  # seconds
WORKER_JOIN_TIMEOUT = 2.0  # seconds to wait for worker shutdown

# ============================================================================
# Logging
# ============================================================================
LOG_FILE_NAME = 'shaderfuzz.log'
LOG_FILE_MAX_SIZE = 5 * 1024 * 1024  # 5 MB
LOG_QUEUE_TIMEOUT = 0.5  # seconds

# ============================================================================
# CLI
# ============================================================================
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_TARGET_ERROR = 3
