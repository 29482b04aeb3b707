"""
Reporting Sub-package
=====================

    - run_log : RunReport step log with provenance and JSON persistence
"""

from revpref.reporting.run_log import RunReport

__all__ = ["RunReport"]
