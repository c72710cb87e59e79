import numpy as np
from sklearn.utils.validation import check_array

from otsmooth.exceptions import InvalidInputError


def check_points(X, d=None, name="X", allow_empty=False):
    """Coerce ``X`` to a float64 ``(m, d)`` array of finite values.

    A 1-D input is read as a single point. Returns ``(array, was_single)``.
    """
    arr = np.asarray(X, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be a point or a 2-D array of points, got ndim={arr.ndim}")
    if arr.shape[0] == 0:
        if not allow_empty:
            raise InvalidInputError(f"{name} is empty")
        if d is not None and arr.shape[1] not in (0, d):
            raise InvalidInputError(f"{name} has dimension {arr.shape[1]}, expected {d}")
        return arr.reshape(0, d if d is not None else arr.shape[1]), single
    try:
        arr = check_array(arr, dtype=np.float64, ensure_2d=True, input_name=name)
    except ValueError as exc:
        raise InvalidInputError(str(exc)) from exc
    if d is not None and arr.shape[1] != d:
        raise InvalidInputError(f"{name} has dimension {arr.shape[1]}, expected {d}")
    return arr, single


def check_vector(v, n=None, name="vector"):
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-D, got ndim={arr.ndim}")
    if n is not None and arr.shape[0] != n:
        raise InvalidInputError(f"{name} has length {arr.shape[0]}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise InvalidInputError(f"{name} must be a positive finite number, got {value!r}")
    return value
