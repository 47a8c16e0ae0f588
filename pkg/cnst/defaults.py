# Published model and acquisition constants; toy defaults are scaled down.

KNOT_COUNT = 101
KNOT_SPACING = 0.002
PSI_MINUS_DEFAULT_INTERVALS = 21
TAIL_CURVATURE = 1.0

SIGMA_MAX = 30.0 / 255.0
NOISE_SCALING_KNOTS = 11
ALPHA_SIGMA_OFFSET = 1e-5

MASK_EPSILON = 0.01

CT_PHOTON_COUNT = 4096.0
CT_ATTENUATION = 81.35858
CT_DOMAIN_WIDTH = 0.26

BLUR_KERNEL_SIZE = 16
BLUR_STD = 2.0
BLUR_STRIDE = 4
MRI_ACCELERATION = 4
MRI_CENTER_FRACTION = 0.08
LIMITED_ANGLE_FRACTION = 0.2

SOLVER_TOL = 1e-6
SOLVER_MAX_ITERS = 2000
POWER_TOL = 1e-8
POWER_MAX_ITERS = 500
POWER_SEED = 1234
# headroom on power-iteration norm estimates
NORM_MARGIN = 1.005

RANK_THRESHOLD = 1e-10
LAMBDA_FLOOR = 1e-8
