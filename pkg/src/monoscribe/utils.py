"""Utility methods."""
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np

from .settings import ALLOWED_DENOMINATORS


def flatten_dict(d: Mapping[str, Any], prefix: str = '') -> Dict[str, Any]:
    """Flatten nested mappings to one level with dotted keys, e.g. {"pipeline": {"gamma": 100}} -> "pipeline.gamma"."""
    flat = {}
    for key, value in d.items():
        key = f'{prefix}{key}'
        if isinstance(value, Mapping):
            flat.update(flatten_dict(value, prefix=f'{key}.'))
        else:
            flat[key] = value
    return flat


def select_configurations(
    configurations: Iterable[Mapping[str, Any]],
    filters: Iterable[str],
) -> List[Mapping[str, Any]]:
    """
    Keep the parameter configurations matching every filter.

    A filter reads "name=value", e.g. "gamma=100" or "grid=1/8". Values are compared as rational numbers, so "0.25"
    selects the grid 1/4.

    :raises ValueError:
        If a filter is malformed, or names a parameter none of the configurations has.
    """
    selected = list(configurations)
    names = {name for configuration in selected for name in configuration}
    for one_filter in filters:
        name, separator, value = one_filter.partition('=')
        name = name.strip()
        if not separator or not name:
            raise ValueError(f'Filter must read name=value, got {one_filter!r}.')
        if name not in names:
            raise ValueError(f'Unknown parameter {name!r}, choose from {sorted(names)}.')
        expected = parse_fraction(value)
        selected = [
            configuration
            for configuration in selected
            if name in configuration and parse_fraction(configuration[name]) == expected
        ]
    return selected


def parse_fraction(value: Union[str, int, float, Fraction]) -> Fraction:
    """
    Parse a beat count given as integer, decimal or "p/q" string.

    :raises ValueError:
        If the value cannot be read as a rational number.
    """
    if isinstance(value, bool):
        raise ValueError(f'Not a beat count: {value!r}')
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # go through the shortest decimal representation, 0.1 -> 1/10
        value = repr(value)
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as error:
        raise ValueError(f'Not a beat count: {value!r}') from error


def format_fraction(value: Fraction) -> Union[int, str]:
    """Format a beat count as int if integral, else as "p/q" string."""
    if value.denominator == 1:
        return value.numerator
    return f'{value.numerator}/{value.denominator}'


def parse_time_signature(text: Union[str, Sequence[int]]) -> Tuple[int, int]:
    """
    Parse a time signature "N/D" (or a pair) and validate the denominator.

    :raises ValueError:
        If the numerator is not positive or the denominator is not a power of two up to 16.
    """
    if isinstance(text, str):
        try:
            numerator, denominator = (int(part) for part in text.split('/'))
        except ValueError as error:
            raise ValueError(f'Time signature must look like N/D, got {text!r}') from error
    else:
        numerator, denominator = (int(part) for part in text)
    if numerator <= 0 or denominator not in ALLOWED_DENOMINATORS:
        raise ValueError(f'Invalid time signature {numerator}/{denominator}')
    return numerator, denominator


def lower_median(values: Sequence[float]) -> float:
    """Median, taking the lower-middle element for even counts."""
    if len(values) == 0:
        raise ValueError('Median of an empty sequence.')
    ordered = np.sort(np.asarray(values, dtype=float))
    return float(ordered[(len(ordered) - 1) // 2])


def parabolic_interpolation(values: np.ndarray, index: int) -> Tuple[float, float]:
    """
    Fit a parabola through (index-1, index, index+1) and return its vertex.

    Falls back to the sample itself at the array borders or for degenerate (flat) neighbourhoods.

    :return:
        The abscissa and the ordinate of the vertex.
    """
    if index <= 0 or index >= len(values) - 1:
        return float(index), float(values[index])
    left, centre, right = values[index - 1], values[index], values[index + 1]
    curvature = left - 2 * centre + right
    if curvature == 0:
        return float(index), float(centre)
    shift = 0.5 * (left - right) / curvature
    # the vertex of a parabola through a local extremum lies within half a sample
    shift = float(np.clip(shift, -0.5, 0.5))
    return index + shift, float(centre - 0.25 * (left - right) * shift)
