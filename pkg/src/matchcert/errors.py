class MatchcertError(ValueError):
    """Contract violation.

    Messages start with a stable kebab-case token (e.g. ``empty-sample``,
    ``invalid-hypergeom-params``) so callers and tests can match on it
    without depending on the free-text tail.
    """
