"""
This file contains a compatibility layer for running from a source checkout
where no distribution metadata is available.
"""

from importlib import metadata


def package_version(package_name: str) -> str:
    """
    Return the installed version of *package_name* or ``"0.0.0"`` when the
    package is imported from a plain source tree.
    """
    try:
        return metadata.version(package_name)
    except metadata.PackageNotFoundError:
        return "0.0.0"
