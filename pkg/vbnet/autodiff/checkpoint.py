"""
Parameter checkpoints.

Both formats hold the same document::

    {"meta": {...}, "params": {name: {"shape": [...], "values": [...]}}}

``.msgpack`` files are binary (msgpack), anything else is written as JSON.
"""
from pathlib import Path
from typing import Dict, Tuple, Union

import msgpack
import numpy as np
from loguru import logger

from vbnet.errors import IngestionError
from vbnet.helper import json_dump, json_load


def _is_binary(path: Path) -> bool:
    return path.suffix == ".msgpack"


def pack_params(params: Dict[str, np.ndarray]) -> Dict[str, Dict]:
    return {
        name: {"shape": list(np.shape(v)), "values": np.asarray(v, dtype=np.float64).ravel().tolist()}
        for name, v in params.items()
    }


def unpack_params(packed: Dict[str, Dict]) -> Dict[str, np.ndarray]:
    params = {}
    for name, entry in packed.items():
        try:
            values = np.asarray(entry["values"], dtype=np.float64)
            params[name] = values.reshape(tuple(entry["shape"]))
        except (KeyError, ValueError, TypeError) as e:
            raise IngestionError(f"malformed checkpoint entry '{name}': {e}") from None
    return params


def save_checkpoint(
    path: Union[str, Path], params: Dict[str, np.ndarray], meta: Dict = None
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"meta": meta or {}, "params": pack_params(params)}
    if _is_binary(path):
        with open(path, "wb") as f:
            f.write(msgpack.packb(document, use_bin_type=True))
    else:
        json_dump(document, path)
    logger.debug(f"saved {len(params)} parameter arrays to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[Dict[str, np.ndarray], Dict]:
    """Returns ``(params, meta)``."""
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"checkpoint {path} does not exist")
    try:
        if _is_binary(path):
            with open(path, "rb") as f:
                document = msgpack.unpackb(f.read(), raw=False)
        else:
            document = json_load(path)
    except (ValueError, msgpack.ExtraData) as e:
        raise IngestionError(f"cannot decode checkpoint {path}: {e}") from None
    if not isinstance(document, dict) or "params" not in document:
        raise IngestionError(f"{path} is not a parameter checkpoint")
    return unpack_params(document["params"]), document.get("meta", {})
