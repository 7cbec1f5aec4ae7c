"""prolite: a small Prolog compiler, mini-assembly VM and FD constraint solver.

The heavy lifting lives in the `_core` extension module; this package
re-exports its public surface.
"""

from _core import (  # noqa: F401
    Session,
    compile_wam,
    compile_ma,
    wam_to_ma,
    encode_symbol,
    decode_symbol,
)

__all__ = [
    "Session",
    "compile_wam",
    "compile_ma",
    "wam_to_ma",
    "encode_symbol",
    "decode_symbol",
]
