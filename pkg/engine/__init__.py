"""
The coverage-guided loop: coverage feedback, samples and corpus, scheduling,
execution, triage, stability filtering, minimization and the campaign driver.
"""

__all__ = []
