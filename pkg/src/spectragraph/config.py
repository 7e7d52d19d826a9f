"""Flat ``key = value`` configuration files.

Blank lines and ``#`` comments are ignored. Every key must appear in
:data:`SCHEMA`; anything else is rejected so typos never pass silently.
"""

from __future__ import annotations

from pathlib import Path


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _words(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none") else float(text)


def _opt_int(text: str):
    return None if text.strip().lower() in ("", "none") else int(text)


# key -> (parser, default, description)
SCHEMA = {
    "dataset": (str, "synth", "synth, bonn or csv"),
    "data_path": (str, None, "Bonn root directory or CSV file/directory"),
    "classes": (str, "A,E", "Bonn subsets, one per class, e.g. A,E"),
    "seg_len": (int, 256, "segment length in samples"),
    "overlap": (int, 0, "overlap between consecutive segments"),
    "near_field_rate": (_opt_float, 0.1, "maximum edge distance as a fraction of the node count"),
    "K": (_opt_int, None, "maximum edge distance in bins (overrides near_field_rate)"),
    "half_spectrum": (_bool, False, "keep only the first n/2 frequency bins"),
    "model": (str, "mlp", "mlp, gnn or ssgcnet"),
    "test_ratio": (float, 0.2, "held-out fraction per class"),
    "split_by": (str, "segment", "segment or record"),
    "samples_per_class": (int, 200, "synthetic task size"),
    "positive_class": (_opt_int, None, "label scored as positive (default: last class)"),
    "epochs": (int, 50, "maximum training epochs"),
    "batch_size": (int, 32, "minibatch size"),
    "lr": (float, 1e-3, "Adam learning rate"),
    "standardize": (_bool, True, "z-score aggregated features with training statistics"),
    "prune_rate": (_opt_float, None, "connection rate kept after pruning; unset disables pruning"),
    "prune_method": (str, "admm", "admm or magnitude"),
    "rho": (float, 1e-2, "ADMM penalty"),
    "rho_growth": (float, 1.0, "per-epoch multiplier on rho"),
    "rho_max": (float, 1.0, "cap for rho growth"),
    "admm_outer_iters": (int, 1, "ADMM cycles per stage per epoch"),
    "w_inner_steps": (int, 30, "Adam steps per w-update"),
    "retrain_epochs": (int, 10, "epochs of masked retraining"),
    "admm_warmup_epochs": (int, 0, "plain epochs before ADMM starts"),
    "prune_biases": (_bool, False, "also constrain bias vectors"),
    "prune_node_scale": (_bool, False, "also constrain the node-scale vector"),
    "seed": (int, 0, "random seed"),
    "deterministic": (_bool, False, "force sequential evaluation"),
    "jobs": (int, 1, "worker threads for graph construction"),
    "rates": (_floats, None, "rate list for sweeps and graph benchmarks"),
    "methods": (_words, ["admm", "magnitude"], "pruning methods for sweep-rate"),
}


def defaults() -> dict:
    return {k: v[1] for k, v in SCHEMA.items()}


def parse_config(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            out[key] = SCHEMA[key][0](value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
    return out


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: unreadable ({exc})") from exc
    return parse_config(text, str(path))


def format_schema() -> str:
    width = max(map(len, SCHEMA))
    return "\n".join(f"{k:<{width}}  {v[2]} (default: {v[1]})" for k, v in SCHEMA.items())
