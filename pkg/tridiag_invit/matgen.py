""" Test matrix families: uniform random, all-ones, and glued Wilkinson """
from dataclasses import dataclass

import numpy as np

from .tridiag import SymTridiagonal

FAMILIES = ("type1", "type2", "glued_wilkinson")

WILKINSON_ORDER = 21
DEFAULT_DELTA = 1e-4


@dataclass(frozen=True)
class MatrixSpec:
    """ One member of a matrix family

    `n` is the dimension for type1/type2 and the number of 21x21 blocks for
    glued_wilkinson. `seed` only matters for type1 and `delta` only for
    glued_wilkinson.
    """
    family: str
    n: int
    seed: int = 1
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"Unknown matrix family \"{self.family}\"")
        if self.n < 1:
            raise ValueError(f"Matrix size must be at least 1, got {self.n}")
        if self.family == "glued_wilkinson" and not 0.0 < self.delta < 1.0:
            raise ValueError(f"Glue value must lie in (0, 1), got {self.delta}")

    @property
    def dimension(self) -> int:
        if self.family == "glued_wilkinson":
            return WILKINSON_ORDER * self.n
        return self.n

    def build(self) -> SymTridiagonal:
        """ Generate the matrix """
        if self.family == "type1":
            return gen_type1(self.n, self.seed)
        if self.family == "type2":
            return gen_type2(self.n)
        return gen_glued_wilkinson(self.n, self.delta)


def gen_type1(n: int, seed: int) -> SymTridiagonal:
    """ Entries uniform in [0, 1), diagonal drawn first from a single Philox stream """
    if n < 1:
        raise ValueError(f"Matrix size must be at least 1, got {n}")
    stream = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    diag = stream.random(n)
    offdiag = stream.random(n - 1)
    return SymTridiagonal(diag, offdiag)


def gen_type2(n: int) -> SymTridiagonal:
    """ Ones on all three diagonals; eigenvalues 1 + 2 cos(k pi / (n + 1)) """
    if n < 1:
        raise ValueError(f"Matrix size must be at least 1, got {n}")
    return SymTridiagonal(np.ones(n), np.ones(n - 1))


def wilkinson_block() -> SymTridiagonal:
    """ W21+: diagonal 10, 9, ..., 1, 0, 1, ..., 10 and unit off-diagonal """
    half = WILKINSON_ORDER // 2
    diag = np.abs(np.arange(-half, half + 1, dtype=np.float64))
    return SymTridiagonal(diag, np.ones(WILKINSON_ORDER - 1))


def gen_glued_wilkinson(num_blocks: int, delta: float = DEFAULT_DELTA) -> SymTridiagonal:
    """ num_blocks copies of W21+ on the diagonal, joined by off-diagonal entries delta """
    if num_blocks < 1:
        raise ValueError(f"Block count must be at least 1, got {num_blocks}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"Glue value must lie in (0, 1), got {delta}")

    block = wilkinson_block()
    diag = np.tile(block.diag, num_blocks)
    offdiag = np.ones(WILKINSON_ORDER * num_blocks - 1)
    # the entry between row 21b and 21b+1 (1-based) joins block b to block b+1
    offdiag[WILKINSON_ORDER - 1::WILKINSON_ORDER] = delta
    return SymTridiagonal(diag, offdiag)
