"""Microgrid vulnerability assessment: generation, Monte Carlo labeling,
attention-model training, and explanation.

Thin dict-friendly wrappers over the compiled core; structured values cross
the extension boundary as JSON strings.
"""

import json as _json

try:  # wheel layout: extension installed inside this package
    from gridshed import _gridshed as _core  # type: ignore[attr-defined]
except ImportError:  # in-tree build: extension on PYTHONPATH as a top-level module
    import _gridshed as _core  # type: ignore[no-redef]

__version__ = _core.__version__

__all__ = [
    "generate",
    "validate",
    "estimate_elsr",
    "shed_rate",
    "node_vulnerability",
    "extract_features",
    "resample_file",
    "train_file",
    "Model",
    "__version__",
]


def generate(n_buses=33, seed=0, **kwargs):
    """Generate one random radial microgrid as a dict.

    Optional keyword arguments: generator_fraction, capacity_ratio,
    wide_q_range.
    """
    config = {"n_buses": n_buses, "seed": seed, **kwargs}
    return _json.loads(_core.generate_json(_json.dumps(config)))


def validate(microgrid):
    """Structural validation report: {"all_passed": bool, "checks": [...]}."""
    return _json.loads(_core.validate_json(_json.dumps(microgrid)))


def estimate_elsr(microgrid, n_scenarios=1000, seed=0, p_min=0.01, p_max=0.2, jobs=1):
    """Monte Carlo expected load shedding rate.

    Returns {"mean", "std_error", "n_scenarios", "half_split_rel_change"}.
    """
    options = {
        "n_scenarios": n_scenarios,
        "seed": seed,
        "p_min": p_min,
        "p_max": p_max,
        "jobs": jobs,
    }
    return _json.loads(
        _core.estimate_elsr_json(_json.dumps(microgrid), _json.dumps(options))
    )


def shed_rate(microgrid, scenario):
    """Shed rate under one explicit scenario.

    ``scenario`` is {"disrupted_buses": [...], "disrupted_lines": [[a, b], ...]}.
    """
    return _core.shed_rate_json(_json.dumps(microgrid), _json.dumps(scenario))


def node_vulnerability(microgrid, bus_id):
    """Shed rate when exactly ``bus_id`` is disrupted."""
    return _core.node_vulnerability(_json.dumps(microgrid), bus_id)


def extract_features(microgrid):
    """Graph features: node/edge feature matrices plus the edge list."""
    return _json.loads(_core.extract_features_json(_json.dumps(microgrid)))


def resample_file(in_path, out_path, bins=20, draws=4000, seed=0):
    """Rebalance a labeled JSONL dataset; returns the record count written."""
    return _core.resample_file(str(in_path), str(out_path), bins, draws, seed)


def train_file(in_path, model_out, **config):
    """Train on labeled JSONL and save a model artifact.

    Keyword arguments: hidden_dim, heads_layer1, heads_layer2, attention_dim,
    epochs, batch_size, learning_rate, validation_fraction, seed.
    Returns a summary dict.
    """
    return _json.loads(
        _core.train_file(str(in_path), str(model_out), _json.dumps(config))
    )


class Model:
    """A trained model artifact loaded in memory."""

    def __init__(self, path):
        self._model = _core.Model(str(path))

    def predict(self, instance):
        """Predict from a microgrid dict, labeled dict, or feature-record dict.

        Returns {"y_hat": float, "node_weights": [float, ...]}.
        """
        return _json.loads(self._model.predict_json(_json.dumps(instance)))

    @property
    def config(self):
        return _json.loads(self._model.config_json())
