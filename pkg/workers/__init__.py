"""
Workers package for shaderfuzz.

Holds the campaign worker run by `process_man.ProcessHandler` for
multi-instance campaigns. It keeps no side-effects at import time.
"""


__all__ = []
