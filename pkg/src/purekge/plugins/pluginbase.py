"""
Shared discovery code for all plugin namespaces.
"""

import importlib
import logging
from threading import Lock
from types import ModuleType
from typing import Any, Callable, Dict, List

from purekge.util import iter_namespace

DISCOVERY_LOCK = Lock()
LOG = logging.getLogger(__name__)


def discover_plugins(
    namespace: str, is_valid_module: Callable[[ModuleType], bool]
) -> Dict[Any, ModuleType]:
    """
    Import every module below *namespace* and index the valid ones by their
    ``IDENTIFIER``.

    Modules which fail to import or which *is_valid_module* rejects are
    skipped (helper modules shared between plugins are rejected this way).

    :raises ImportError: if two plugins claim the same identifier
    """
    with DISCOVERY_LOCK:
        try:
            nsmod = importlib.import_module(namespace)
        except ImportError as exc:
            LOG.debug(
                "Unable to load plugins in %r: %s",
                namespace,
                exc,
                exc_info=True,
            )
            return {}

        found: Dict[Any, ModuleType] = {}
        for _, name, _ in iter_namespace(nsmod):
            try:
                mod = importlib.import_module(name)
            except ImportError as exc:
                LOG.debug(
                    "Skipping plugin %r which failed to import: %s",
                    name,
                    exc,
                    exc_info=True,
                )
                continue
            if not is_valid_module(mod):
                LOG.debug("%r is not a plugin module, skipping", name)
                continue
            if mod.IDENTIFIER in found:
                raise ImportError(
                    f"Plugin {mod!r} reuses the identifier "
                    f"{mod.IDENTIFIER!r} already taken by "
                    f"{found[mod.IDENTIFIER]!r}"
                )
            found[mod.IDENTIFIER] = mod
        LOG.debug("Discovered %d plugins in %r", len(found), namespace)
        return found


class Loader:
    """
    Lazy lookup of plugin modules in one namespace.

    Discovery runs on first use only.
    """

    def __init__(
        self, namespace: str, validator: Callable[[ModuleType], bool]
    ) -> None:
        self.namespace = namespace
        self.validator = validator
        self.discovered_plugins: Dict[Any, ModuleType] = {}

    def __repr__(self) -> str:
        return f"<Loader {self.namespace!r}>"

    def known_identifiers(self) -> List[Any]:
        """
        Return the identifiers of all discovered plugins
        """
        self._discover()
        return sorted(self.discovered_plugins)

    def _discover(self) -> None:
        if not self.discovered_plugins:
            self.discovered_plugins = discover_plugins(
                self.namespace, self.validator
            )

    def create(self, name: Any) -> Any:
        """
        Return the plugin module whose ``IDENTIFIER`` equals *name*, or
        ``None`` if there is no such plugin.
        """
        self._discover()
        return self.discovered_plugins.get(name)
