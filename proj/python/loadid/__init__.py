"""Dynamic load identification workbench.

DOF indices are 1-based everywhere in this package, matching the JSON
configs and the CSV reports.
"""

import json as _json

from ._loadid import (
    LoadidError,
    __version__,
    accumulated_error,
    compare,
    filter_sequence,
    generate_sequence,
    mse,
    predict_load,
    preset,
    resolve_config,
    schema,
    sha256_hex,
    shear_matrices,
    six_story_matrices,
)


def config(document=None, **overrides):
    """Resolve a config given as a dict or JSON text; returns a dict."""
    if document is None:
        document = {}
    if not isinstance(document, str):
        document = _json.dumps(document)
    resolved = _json.loads(resolve_config(document))
    if overrides:
        resolved.update(overrides)
        resolved = _json.loads(resolve_config(_json.dumps(resolved)))
    return resolved


__all__ = [
    "LoadidError",
    "__version__",
    "accumulated_error",
    "compare",
    "config",
    "filter_sequence",
    "generate_sequence",
    "mse",
    "predict_load",
    "preset",
    "resolve_config",
    "schema",
    "sha256_hex",
    "shear_matrices",
    "six_story_matrices",
]
