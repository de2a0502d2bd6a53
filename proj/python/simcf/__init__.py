from ._simcf import *  # noqa: F401,F403
