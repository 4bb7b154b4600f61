"""Executable functional abstractions of math problems.

Pipeline: ingest seed problems, prompt a model to rewrite each one as a
parameterized program, validate candidates behaviorally in a sandboxed
runner, then use survivors to sample variants, build training data, evaluate
solvers, and search for hard instances.
"""

__version__ = "0.1.0"
