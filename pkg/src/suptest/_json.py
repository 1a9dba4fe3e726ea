"""JSON text with reals written at 17 significant digits."""

import json
import math


def _encode(obj, out):
    if obj is None or isinstance(obj, (bool, str)):
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(int(obj)))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite real {obj!r} cannot be serialized")
        out.append(format(obj, ".17g"))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (key, value) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(key)))
            out.append(": ")
            _encode(value, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, value in enumerate(obj):
            if i:
                out.append(", ")
            _encode(value, out)
        out.append("]")
    elif hasattr(obj, "item"):  # numpy scalar
        _encode(obj.item(), out)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    """Serialize ``obj``; dict order is preserved and floats use ``%.17g``."""
    out = []
    _encode(obj, out)
    return "".join(out)


def fmt_real(x):
    return format(float(x), ".17g")


loads = json.loads
