"""geolab: a collaborative classroom geometry laboratory server with an
embedded ruler-compass kernel, randomized soundness checker, Unix-style
construction permissions, per-user scrapbooks and lock-based group
sessions."""

__version__ = "0.1.0"
PROTOCOL_VERSION = 1
