"""Kernel selection: compiled extension when available, pure Python otherwise.

Set EDITGLOSS_PURE=1 to force the pure-Python kernels (used by the
benchmark and the parity tests).
"""
import os

if os.environ.get("EDITGLOSS_PURE") == "1":
    from editgloss._kernels_py import char_edit_distance, longest_match

    NATIVE = False
else:
    try:
        from editgloss._kernels import char_edit_distance, longest_match

        NATIVE = True
    except ImportError:
        from editgloss._kernels_py import char_edit_distance, longest_match

        NATIVE = False

__all__ = ["char_edit_distance", "longest_match", "NATIVE"]
