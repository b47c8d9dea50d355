"""Word alignment: IBM Model 1 training, symmetrization, Pharaoh i-j files.

The EM inner loop has two interchangeable implementations: a compiled
extension and a pure-Python twin that performs the same float operations in
the same order, so both produce bit-identical tables.  The compiled one is
used when built; set COREFMT_PURE=1 to force the pure kernel.
"""

from .ibm1 import (
    NULL,
    SYMMETRIZATIONS,
    TranslationTable,
    align_pair,
    get_kernel,
    kernel_backend,
    load_table_tsv,
    symmetrize,
    train_model1,
)
from .pharaoh import (
    format_pharaoh_line,
    parse_pharaoh_line,
    read_pharaoh,
    write_pharaoh,
)
from .types import Alignment

__all__ = [
    "Alignment",
    "NULL",
    "SYMMETRIZATIONS",
    "TranslationTable",
    "align_pair",
    "format_pharaoh_line",
    "get_kernel",
    "kernel_backend",
    "load_table_tsv",
    "parse_pharaoh_line",
    "read_pharaoh",
    "symmetrize",
    "train_model1",
    "write_pharaoh",
]
