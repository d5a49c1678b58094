"""Version information for the freecrm package."""

__version__ = "0.1.0"
__version_info__ = (0, 1, 0)
__author__ = "freecrm developers"
__email__ = "freecrm@users.noreply.github.com"
__license__ = "MIT"
