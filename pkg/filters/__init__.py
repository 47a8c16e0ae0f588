from filters.filter_bank import FilterBank, correlate_same, correlate_same_adjoint, dct_kernels, dirac_kernel, \
    kernel_intersection_lower_bound, operator_matrix

__all__ = ["FilterBank", "correlate_same", "correlate_same_adjoint", "dct_kernels", "dirac_kernel",
           "kernel_intersection_lower_bound", "operator_matrix"]
