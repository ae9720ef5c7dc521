"""folkrec: tag recommenders over folksonomies with semantic/lexical memory
and time-dependent forgetting, plus the benchmark harness around them."""

__version__ = "0.1.0"

from .folksonomy import (  # noqa: F401
    DatasetSplit,
    Folksonomy,
    Post,
    filter_test_users,
    ingest,
    leave_one_out_split,
    normalize_tag,
)
from .threelayers import Cue, UserMemory, build_memory, recommend  # noqa: F401
from .topics import LdaConfig, TopicModel, infer_topics, train_lda  # noqa: F401
