"""Shared matrices and builders for the test suite."""

import numpy as np
from scipy.stats import unitary_group

from app.core.operators import matrix_unit

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def random_unitary(n: int, seed: int) -> np.ndarray:
    return np.asarray(unitary_group.rvs(n, random_state=seed), dtype=complex)


def planted_algebra(blocks, seed):
    """Basis of U (+)_b (1_m (x) M_n) U^dag, plus the central projections of the blocks."""
    dim = sum(n * m for n, m in blocks)
    u = random_unitary(dim, seed) if dim > 1 else np.eye(1, dtype=complex)
    basis = []
    projections = []
    offset = 0
    for n, m in blocks:
        size = n * m
        p = np.zeros((dim, dim), dtype=complex)
        p[offset:offset + size, offset:offset + size] = np.eye(size)
        projections.append(u @ p @ u.conj().T)
        for i in range(n):
            for j in range(n):
                x = np.zeros((dim, dim), dtype=complex)
                block = np.kron(np.eye(m), matrix_unit(n, i, j))
                x[offset:offset + size, offset:offset + size] = block
                basis.append(u @ x @ u.conj().T)
        offset += size
    return basis, projections


def complex_json(matrix) -> list:
    """Matrix as nested [re, im] pairs, the format of definition files."""
    m = np.asarray(matrix, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]
