from os import environ
from os.path import abspath, exists
from typing import Any

import fabric

#: Source packages and the doc folders their API pages are generated into.
#: The plugin package is a native namespace package.
API_TREES = (
    ("src/purekge", "doc/api", False),
    ("src/purekge_plugins", "doc/plugins_api", True),
)

DRKG_TARGET = "tests/data/drkg.tsv"


def sphinx_tool(name: str) -> str:
    if "READTHEDOCS" in environ:
        return name
    return abspath(f"env/bin/{name}")


@fabric.task
def apidoc(ctx: Any) -> None:
    """
    Regenerate the API pages of ``purekge`` and the model plugins
    """
    for src, dest, is_nspkg in API_TREES:
        ctx.run(f"rm -rf {dest}", replace_env=False)
        nsopt = " --implicit-namespaces" if is_nspkg else ""
        ctx.run(
            f"{sphinx_tool('sphinx-apidoc')} -o {dest} -f{nsopt} -e -M {src}",
            replace_env=False,
        )


@fabric.task(pre=[apidoc])
def doc(ctx: Any) -> None:
    with ctx.cd("doc"):
        ctx.run(
            f"{sphinx_tool('sphinx-build')} -b html -d _build/doctrees "
            ". _build/html",
            replace_env=False,
        )


@fabric.task
def test(ctx: Any, cov: bool = False) -> None:
    """
    Run the unit-tests and the doctests of the library
    """
    opts = " --cov=purekge --cov=purekge_plugins" if cov else ""
    ctx.run(
        f"./env/bin/pytest --doctest-modules{opts} tests src",
        replace_env=False,
        pty=True,
    )


@fabric.task
def drkg(ctx: Any, path: str) -> None:
    """
    Link the full DRKG triple file into the test data so the slow dataset
    checks run
    """
    if not exists(path):
        raise SystemExit(f"{path} does not exist")
    ctx.run(f"ln -sf {abspath(path)} {DRKG_TARGET}", replace_env=False)


@fabric.task
def develop(ctx: Any) -> None:
    """
    Set up a development environment
    """
    ctx.run("[ -d env ] || python3 -m venv env", replace_env=False)
    ctx.run("./env/bin/pip install -U pip", replace_env=False)
    ctx.run("./env/bin/pip install -e .[dev]", replace_env=False)
