from operators.blur_stride import BlurStrideOperator, gaussian_kernel
from operators.fourier_subsample import FourierSubsampleOperator, select_columns
from operators.identity import IdentityOperator
from operators.linear_operator import LinearOperator, op_adjoint, op_apply
from operators.operator_factory import OperatorFactory
from operators.radon import RadonOperator, limited_angle, parallel_angles

__all__ = ["BlurStrideOperator", "gaussian_kernel", "FourierSubsampleOperator", "select_columns",
           "IdentityOperator", "LinearOperator", "op_adjoint", "op_apply", "OperatorFactory", "RadonOperator",
           "limited_angle", "parallel_angles"]
