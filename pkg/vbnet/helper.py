import hashlib
import os
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import orjson

_ORJSON_OPTIONS = orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS


def json_load(filepath: Union[str, Path], mode="rb"):
    with open(filepath, mode=mode) as f:
        return orjson.loads(f.read())


def json_dump(
    data: Union[List, Dict], filepath: Union[str, Path], indent_2=False, mode="wb"
):
    orjson_option = _ORJSON_OPTIONS
    if indent_2:
        orjson_option |= orjson.OPT_INDENT_2
    Path(filepath).parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, mode=mode) as f:
        f.write(orjson.dumps(data, option=orjson_option))


def stable_hash(data: Dict) -> str:
    """
    Hash of a JSON-serializable mapping that does not depend on key order.

    >>> stable_hash({"a": 1, "b": 2}) == stable_hash({"b": 2, "a": 1})
    True
    """
    payload = orjson.dumps(data, option=_ORJSON_OPTIONS | orjson.OPT_SORT_KEYS)
    return hashlib.sha256(payload).hexdigest()[:16]


def spawn_seeds(seed: int, *names: str) -> Dict[str, int]:
    """
    Independent integer seeds, one per named concern, derived from one root seed.

    >>> spawn_seeds(7, "init", "shuffle") == spawn_seeds(7, "init", "shuffle")
    True
    """
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: int(child.generate_state(1)[0]) for name, child in zip(names, children)}


def str2list(s: str, sep=","):
    """
    >>> str2list(" 0.02, 0.04 ,,0.06")
    ['0.02', '0.04', '0.06']
    """
    if s:
        return [i.strip() for i in s.split(sep) if i.strip()]
    else:
        return []


def as_float_list(value, sep=",") -> List[float]:
    """
    Normalizes a CLI value that may arrive as a string, a number or a sequence.

    >>> as_float_list("0.02,0.5")
    [0.02, 0.5]
    >>> as_float_list((0.1, 1))
    [0.1, 1.0]
    """
    if value is None:
        return []
    if isinstance(value, str):
        return [float(i) for i in str2list(value, sep=sep)]
    if isinstance(value, (int, float)):
        return [float(value)]
    return [float(i) for i in value]


def env2int(env_name: str, _default: Optional[int]) -> Optional[int]:
    env_str = os.environ.get(env_name, "").strip()
    if not env_str:
        return _default
    return int(env_str)
