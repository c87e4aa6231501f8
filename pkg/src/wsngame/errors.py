class ConfigError(ValueError):
    """Raised when a configuration value violates a constraint.

    ``violations`` holds one ``(field, message)`` pair per problem found,
    so callers can report every issue at once instead of the first one.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [("config", violations)]
        self.violations = list(violations)
        text = "; ".join(f"{name}: {msg}" for name, msg in self.violations)
        super().__init__(text)


class UsageError(ValueError):
    """An API was called with an argument it does not accept."""
