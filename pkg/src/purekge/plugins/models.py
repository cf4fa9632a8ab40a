"""
This module provides a plugin architecture for scoring-function models.

Each model can be distributed as separate package by providing modules
inside the namespace-package ``purekge_plugins.models``. Note that in order
to be a valid namespace-package, such a package *must not* have a
``__init__.py`` file!

Example folder-structure for a model plugin:

.. code-block:: text

    my-model-plugin/
     +- pyproject.toml
     +- purekge_plugins/
         +- models/
             +- mymodel.py

In order for modules to be detected as plugin, they must follow the following
rules:

* Have a no-arg function ``create`` returning an instance of (a subclass of)
  :py:class:`~.ScoringFunction`.
* Contain a string-variable ``IDENTIFIER``. This is the model name used in
  configuration files (for example ``"DistMult"``).
* Contain an int-variable ``CODE``. This value is written into checkpoint
  headers and must be unique.

All scores follow the convention "higher score = more plausible triple".
"""

from types import ModuleType
from typing import List, Tuple

import numpy as np

from purekge.exc import UnknownModelKind
from purekge.plugins.pluginbase import Loader
from purekge.typevars import FloatArray

try:
    from typing import Protocol
except ImportError:  # pragma: no cover
    from typing_extensions import Protocol  # type: ignore

NAMESPACE = "purekge_plugins.models"

TPartials = Tuple[FloatArray, FloatArray, FloatArray]


class TModelPlugin(Protocol):
    """
    Protocol for the plugin modules
    """

    # pylint: disable=too-few-public-methods

    IDENTIFIER: str
    CODE: int

    def create(self) -> "ScoringFunction":  # pragma: no cover
        """
        Create a new instance of the scoring function
        """
        ...


class ScoringFunction:
    """
    A scoring function with analytic partial derivatives.

    All methods are vectorised: *H*, *R* and *T* are ``(B, width)`` arrays
    holding the parameter rows of ``B`` triples. Instances are stateless, the
    parameters are owned by :py:class:`purekge.model.ModelParams`.
    """

    #: The model name used in configuration files
    IDENTIFIER: str = ""

    #: Whether the L2 penalty applies to relation rows
    PENALIZE_RELATIONS: bool = True

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} {self.IDENTIFIER!r}>"

    def entity_width(self, dim: int) -> int:
        """
        Number of stored values per entity for embedding dimension *dim*
        """
        return dim

    def relation_width(self, dim: int) -> int:
        """
        Number of stored values per relation for embedding dimension *dim*
        """
        return dim

    def init_entities(
        self, rng: np.random.Generator, count: int, dim: int
    ) -> FloatArray:
        """
        Draw initial entity rows uniformly from ``[-6/sqrt(d), 6/sqrt(d)]``
        """
        bound = 6.0 / np.sqrt(dim)
        return rng.uniform(-bound, bound, (count, self.entity_width(dim)))

    def init_relations(
        self, rng: np.random.Generator, count: int, dim: int
    ) -> FloatArray:
        """
        Draw initial relation rows uniformly from ``[-6/sqrt(d), 6/sqrt(d)]``
        """
        bound = 6.0 / np.sqrt(dim)
        return rng.uniform(-bound, bound, (count, self.relation_width(dim)))

    def scores(
        self, H: FloatArray, R: FloatArray, T: FloatArray
    ) -> FloatArray:  # pragma: no cover
        """
        Return the ``(B,)`` plausibility scores of the triples
        """
        raise NotImplementedError(f"Not yet implemented in {self.__class__}")

    def partials(
        self, H: FloatArray, R: FloatArray, T: FloatArray
    ) -> TPartials:  # pragma: no cover
        """
        Return the derivatives of :py:meth:`scores` with respect to each
        row of *H*, *R* and *T*
        """
        raise NotImplementedError(f"Not yet implemented in {self.__class__}")

    def heads(self, E: FloatArray, r: FloatArray, t: FloatArray) -> FloatArray:
        """
        Score ``(e, r, t)`` for every entity row *e* of *E*.

        The default broadcasts *r* and *t* over the rows of *E*. Models with
        a cheaper closed form override this.
        """
        count = E.shape[0]
        return self.scores(
            E,
            np.broadcast_to(r, (count, r.shape[-1])),
            np.broadcast_to(t, (count, t.shape[-1])),
        )

    def tails(self, h: FloatArray, r: FloatArray, E: FloatArray) -> FloatArray:
        """
        Score ``(h, r, e)`` for every entity row *e* of *E*.
        """
        count = E.shape[0]
        return self.scores(
            np.broadcast_to(h, (count, h.shape[-1])),
            np.broadcast_to(r, (count, r.shape[-1])),
            E,
        )


def is_valid_model_plugin(mod: ModuleType) -> bool:
    """
    Return True if the module in *mod* is usable as model plugin
    """
    return all(
        [
            hasattr(mod, "create"),
            hasattr(mod, "IDENTIFIER"),
            hasattr(mod, "CODE"),
        ]
    )


LOADER = Loader(NAMESPACE, is_valid_model_plugin)


def known_identifiers() -> List[str]:
    """
    Return the identifiers of all installed model plugins
    """
    return LOADER.known_identifiers()


def plugin_module(identifier: str) -> TModelPlugin:
    """
    Return the plugin module registered under *identifier*

    :raises purekge.exc.UnknownModelKind: If no module with the given
        identifier is found
    """
    result = LOADER.create(identifier)
    if not result:
        raise UnknownModelKind(
            NAMESPACE,
            identifier,
            LOADER.known_identifiers(),
        )
    return result  # type: ignore


def create(identifier: str) -> ScoringFunction:
    """
    Return a new scoring function by identifier.

    :param identifier: The model name, for example ``"RotatE"``
    :raises purekge.exc.UnknownModelKind: If no module with the given
        identifier is found
    """
    return plugin_module(identifier).create()
