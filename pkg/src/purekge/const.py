"""
This file contains various values used to avoid magic numbers and strings in
the application.
"""

#: A magic value used to detect strict error-handling
ERRORS_STRICT = "strict"

#: A magic value used to detect lenient error-handling
ERRORS_WARN = "warn"

#: Separator between the type tag and the local name of an entity
#: (``Compound::DB00811``)
ENTITY_TYPE_SEPARATOR = "::"

#: Type tag given to entity names which carry no type prefix
UNKNOWN_ENTITY_TYPE = "Unknown"

#: Field separator in triple files and dictionaries
FIELD_SEPARATOR = "\t"

#: Train/valid/test fractions used when the user does not specify any
DEFAULT_SPLIT_RATIOS = (0.9, 0.05, 0.05)

#: Allowed slack when checking that split ratios sum up to one
RATIO_TOLERANCE = 1e-9

#: File names written by the ingest step
TRAIN_FILE = "train.tsv"
VALID_FILE = "valid.tsv"
TEST_FILE = "test.tsv"
ENTITY_DICT_FILE = "entities.dict"
RELATION_DICT_FILE = "relations.dict"
ENTITY_TYPES_FILE = "entity_types.tsv"

#: Embedding dimension used for every scoring-function model
DEFAULT_DIM = 400

DEFAULT_EPOCHS = 100
DEFAULT_BATCH_SIZE = 1024

#: Number of corrupted triples drawn per positive triple
DEFAULT_NEGATIVES = 16

DEFAULT_OPTIMIZER = "adam"
DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_ADAM_BETA1 = 0.9
DEFAULT_ADAM_BETA2 = 0.999
DEFAULT_ADAM_EPS = 1e-8

#: Strength of the L2 penalty for models regularised by "penalty"
DEFAULT_L2_LAMBDA = 1e-5

DEFAULT_SEED = 0

#: How often a corruption reproducing a known triple is re-drawn before it
#: is kept anyway
MAX_REDRAW_ATTEMPTS = 100

#: Cut-offs reported as "Hits@N"
HITS_AT = (1, 3, 10)

#: Scores closer than this (relative to the true score, at least 1.0) tie
SCORE_TIE_RTOL = 1e-10

#: Number of drugs kept per model in the repurposing ranking
DEFAULT_TOP_K = 100

#: Leading bytes of every checkpoint file
CHECKPOINT_MAGIC = b"KGE1"

#: File suffix of checkpoints and their metadata sidecar
CHECKPOINT_SUFFIX = ".kge"
METADATA_SUFFIX = ".meta"

#: Environment variable capping the number of worker threads. Unset or 0
#: means single-threaded, deterministic execution.
THREADS_ENV = "KGE_THREADS"
