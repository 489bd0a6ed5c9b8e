from .syntax import *  # noqa: F401,F403
