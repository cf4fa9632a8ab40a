"""
Extension points of purekge.

Plugins live in the namespace package ``purekge_plugins`` and are discovered
at runtime, see :py:mod:`purekge.plugins.models`.
"""
