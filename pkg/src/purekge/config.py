"""
Run configuration files.

A configuration file holds flat ``key = value`` lines. Everything after a
``#`` is a comment and blank lines are ignored:

.. code-block:: text

    # DistMult on the toy graph
    model = DistMult
    dim = 16
    epochs = 200
    splits_dir = splits
    checkpoint_dir = checkpoints

Keys are the field names of :py:class:`~purekge.trainer.TrainConfig` and
:py:class:`RunConfig`. Unknown keys are an error. Relative paths are taken
relative to the directory containing the configuration file.
"""

import logging
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import (
    Any,
    Callable,
    Dict,
    Iterable,
    List,
    Mapping,
    Optional,
    Tuple,
)

from purekge.const import DEFAULT_TOP_K
from purekge.exc import ConfigError, ParseError, UnknownConfigKey
from purekge.trainer import TrainConfig
from purekge.util import TPath

LOG = logging.getLogger(__name__)

SETTINGS = ("raw", "filtered", "both")
SIDES = ("head", "tail", "both")

TRUE_WORDS = frozenset({"1", "true", "yes", "on"})
FALSE_WORDS = frozenset({"0", "false", "no", "off"})


def parse_bool(value: str) -> bool:
    """
    Convert a configuration value to a boolean

    >>> parse_bool("Yes"), parse_bool("0")
    (True, False)
    """
    word = value.strip().lower()
    if word in TRUE_WORDS:
        return True
    if word in FALSE_WORDS:
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _optional_str(value: str) -> Optional[str]:
    return value or None


#: Conversion of the raw text for every known key
CONVERTERS: Dict[str, Callable[[str], Any]] = {
    "model": str,
    "dim": int,
    "epochs": int,
    "batch_size": int,
    "negatives": int,
    "optimizer": str,
    "learning_rate": float,
    "adam_beta1": float,
    "adam_beta2": float,
    "adam_eps": float,
    "l2_mode": _optional_str,
    "l2_lambda": float,
    "rescal_symmetric": parse_bool,
    "filter_false_negatives": parse_bool,
    "seed": int,
    "checkpoint_every": int,
    "max_wall_time": float,
    "triples": Path,
    "splits_dir": Path,
    "checkpoint_dir": Path,
    "drug_file": Path,
    "target_file": Path,
    "relation_file": Path,
    "trial_file": Path,
    "setting": str,
    "side": str,
    "k": int,
    "reduction": str,
    "lenient": parse_bool,
}

TRAIN_KEYS = frozenset(item.name for item in fields(TrainConfig))


@dataclass(frozen=True)
class RunConfig:
    """
    Everything a command line run needs: the training hyper-parameters,
    file locations and evaluation options.
    """

    # pylint: disable=too-many-instance-attributes

    train: TrainConfig
    triples: Optional[Path] = None
    splits_dir: Path = Path("splits")
    checkpoint_dir: Path = Path("checkpoints")
    drug_file: Optional[Path] = None
    target_file: Optional[Path] = None
    relation_file: Optional[Path] = None
    trial_file: Optional[Path] = None
    setting: str = "filtered"
    side: str = "head"
    k: int = DEFAULT_TOP_K
    reduction: str = "max"
    lenient: bool = False

    def __post_init__(self) -> None:
        if self.setting not in SETTINGS:
            raise ConfigError(
                f"setting must be one of {', '.join(SETTINGS)}, "
                f"got {self.setting!r}"
            )
        if self.side not in SIDES:
            raise ConfigError(
                f"side must be one of {', '.join(SIDES)}, got {self.side!r}"
            )
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k!r}")
        if self.reduction not in ("max", "mean"):
            raise ConfigError(
                f"reduction must be 'max' or 'mean', got {self.reduction!r}"
            )

    def require(self, *names: str) -> List[Path]:
        """
        Return the paths of the named fields, making sure they are set and
        exist.

        :raises purekge.exc.ConfigError: naming the first missing path
        """
        output = []
        for name in names:
            value = getattr(self, name)
            if value is None:
                raise ConfigError(f"Configuration key {name!r} is required")
            if not Path(value).exists():
                raise ConfigError(f"{name}: {value} does not exist")
            output.append(Path(value))
        return output

    def reconfigure(self, **changes: Any) -> "RunConfig":
        """
        Return a copy with some values replaced. Keys of the training
        configuration are routed to :py:attr:`train`.
        """
        train_changes = {k: v for k, v in changes.items() if k in TRAIN_KEYS}
        run_changes = {k: v for k, v in changes.items() if k not in TRAIN_KEYS}
        return replace(
            self, train=replace(self.train, **train_changes), **run_changes
        )

    def metadata(self) -> Dict[str, str]:
        """
        Return the training configuration as strings, for checkpoint
        metadata files
        """
        output = {}
        for key, value in asdict(self.train).items():
            output[key] = "" if value is None else str(value)
        return output


def parse_lines(
    lines: Iterable[str], source: str = "<config>"
) -> List[Tuple[str, str, int]]:
    """
    Split configuration lines into ``(key, value, line number)`` tuples

    >>> parse_lines(["# comment", "", "dim = 16  # small"])
    [('dim', '16', 3)]

    :raises purekge.exc.ParseError: On lines without ``=`` or with an empty
        key
    """
    output = []
    for lineno, line in enumerate(lines, 1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        key, separator, value = content.partition("=")
        key = key.strip()
        if not separator or not key:
            raise ParseError("expected 'key = value'", lineno, source)
        output.append((key, value.strip(), lineno))
    return output


def build_config(
    entries: Iterable[Tuple[str, str, int]],
    source: str = "<config>",
    base_dir: Optional[Path] = None,
) -> RunConfig:
    """
    Convert parsed ``(key, value, line)`` entries into a :py:class:`RunConfig`

    :raises purekge.exc.UnknownConfigKey: On keys which are not recognised
    :raises purekge.exc.ConfigError: On invalid values
    """
    values: Dict[str, Any] = {}
    for key, raw, lineno in entries:
        if key not in CONVERTERS:
            raise UnknownConfigKey(key, lineno, source)
        if key in values:
            LOG.warning(
                "%s:%d: %r overrides an earlier value", source, lineno, key
            )
        try:
            value = CONVERTERS[key](raw)
        except ValueError as exc:
            raise ConfigError(
                f"{source}:{lineno}: invalid value for {key!r}: {exc}"
            ) from exc
        if isinstance(value, Path) and base_dir and not value.is_absolute():
            value = base_dir / value
        values[key] = value
    if "model" not in values:
        raise ConfigError(f"{source}: the 'model' key is required")
    train = TrainConfig(**{k: v for k, v in values.items() if k in TRAIN_KEYS})
    return RunConfig(
        train, **{k: v for k, v in values.items() if k not in TRAIN_KEYS}
    )


def load_config(
    path: TPath, overrides: Optional[Mapping[str, Any]] = None
) -> RunConfig:
    """
    Read a configuration file.

    :param overrides: Values which replace those of the file (for example
        from command line flags). ``None`` values are ignored.
    """
    source = str(path)
    location = Path(path)
    try:
        text = location.read_text(encoding="utf8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"Unable to read {source}: {exc}") from exc
    config = build_config(
        parse_lines(text.splitlines(), source), source, location.parent
    )
    changes = {
        key: value
        for key, value in (overrides or {}).items()
        if value is not None
    }
    unknown = sorted(set(changes) - set(CONVERTERS))
    if unknown:
        raise UnknownConfigKey(unknown[0])
    if changes:
        config = config.reconfigure(**changes)
    LOG.debug("Loaded configuration %r", config)
    return config
