"""Pin BLAS/LAPACK to one thread so results are bitwise reproducible."""
from contextlib import contextmanager

from threadpoolctl import threadpool_limits


@contextmanager
def serial_blas():
    with threadpool_limits(limits=1, user_api="blas"):
        yield
