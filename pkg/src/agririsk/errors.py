"""Exception types shared across the package.

The split matters to the command line front end: input problems exit
with status 2, model/pipeline failures with status 1.
"""


class InputError(ValueError):
    """Malformed or inconsistent user input (CSV schema, config values)."""


class ModelError(ValueError):
    """A model precondition or numerical invariant was violated."""
