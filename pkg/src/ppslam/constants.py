"""Numerical tolerances shared by the library and the test suite."""

# Rotation matrices: ||R R^T - I|| and |det R - 1|.
TOL_ORTHO = 1e-9
# Unit quaternions are renormalized to this precision after every update.
TOL_QUAT_NORM = 1e-12
# Accepted deviation from unit norm at API boundaries.
TOL_QUAT_INPUT = 1e-9
# Antisymmetry check for vee().
TOL_ANTISYM = 1e-9
# so3_exp switches to a second-order series below this angle (rad).
SMALL_ANGLE = 1e-8
# Relative distance to the envelope edge treated as a violation.
ENVELOPE_GUARD = 1e-12
# Lambda diagonals below this are considered singular.
LAMBDA_FLOOR = 1e-300

# Default integration and logging steps (s).
DEFAULT_DT = 1e-3
DEFAULT_LOG_INTERVAL = 1e-2
DEFAULT_DURATION = 40.0

# Lyapunov monotonicity slack per unit time.
LYAPUNOV_SLACK = 1e-6
