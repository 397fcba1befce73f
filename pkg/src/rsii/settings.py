import copy
import json
from importlib.resources import files
from typing import Any, Mapping, Optional

# Sections replaced as a whole by an override instead of merged key by key.
REPLACED_SECTIONS = ("phantom",)


def load_default() -> dict[str, Any]:
    p = files("rsii.data").joinpath("default_config.json")
    return json.loads(p.read_text(encoding="utf-8"))


def load(path: str) -> dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    """Deep-merge ``override`` into a copy of ``base``; nested dicts merge recursively."""
    out = copy.deepcopy(dict(base))
    for key, value in override.items():
        if (
            key not in REPLACED_SECTIONS
            and isinstance(value, Mapping)
            and isinstance(out.get(key), Mapping)
        ):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def set_dotted(cfg: dict[str, Any], dotted: str, value: Any) -> None:
    """Set ``cfg["a"]["b"] = value`` for ``dotted == "a.b"``, creating sections as needed."""
    *parents, leaf = dotted.split(".")
    node = cfg
    for part in parents:
        if node.get(part) is None:
            node[part] = {}
        node = node[part]
    node[leaf] = value


def resolve(
    config_path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None
) -> dict[str, Any]:
    """
    Packaged defaults, then the JSON file at ``config_path``, then dotted-key ``overrides``.

    A ``None`` override value means "not given" and is skipped.
    """
    cfg = load_default()
    if config_path:
        cfg = merge(cfg, load(config_path))
    for dotted, value in (overrides or {}).items():
        if value is not None:
            set_dotted(cfg, dotted, value)
    return cfg
