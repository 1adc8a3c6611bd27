"""Network gateway: request API, session channel, configuration, serving."""

from .app import create_app, route, serve, Runtime
from .config import ServerConfig, load_config

__all__ = ["create_app", "route", "serve", "Runtime", "ServerConfig",
           "load_config"]
