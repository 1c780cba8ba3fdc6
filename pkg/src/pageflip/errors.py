"""Exception types shared across the package."""


class PageflipError(Exception):
    """Base class for all controlled failures."""


class NonConvergence(PageflipError):
    """The equilibrium solver ran out of iterations."""


class PoseLimit(PageflipError):
    """Finger orientation left the open interval (-pi/2, pi/2)."""


class DegenerateInput(PageflipError):
    """Geometry too small or coincident to fit or measure."""


class ContactLost(PageflipError):
    """Shape feedback requested while the finger is not touching the page."""


class TrialLimit(PageflipError):
    """Adaptive pressing exhausted its trial budget."""


class ConfigError(PageflipError):
    """Experiment configuration failed validation."""
