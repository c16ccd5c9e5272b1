# -*- coding: utf-8 -*-

"""
Serialization of experiment artifacts.

JSON documents are pretty-printed with two-space indentation and keep
the key order of the objects they come from, and non-finite floats are
written as ``null``. CSV files are UTF-8 with a header row. Both
formats are deterministic so that repeated runs with the same seed
produce identical files.
"""

import csv
import json
import math
from pathlib import Path
from typing import IO, Any, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

FileOrFilename = Union[str, Path, IO[str]]

RUN_COLUMNS = (
    'run_id',
    'seed',
    'converged',
    'iterations',
    'final_fourier_error',
    'final_phase_error',
    'cluster_id',
    'ambiguity_class',
)

SENSITIVITY_COLUMNS = (
    'n_total',
    'q_mean_err',
    'q_std_err',
    'cl_mean_err_correct',
    'cl_success_frac',
    'cl_min_bound',
)


def jsonable(obj: Any) -> Any:
    """
    Return *obj* with numpy values and non-finite floats made JSON-safe.

    Example:
        >>> from qretrieve.codec import jsonable
        >>> jsonable({'a': float('nan'), 'b': (1, 2.5)})
        {'a': None, 'b': [1, 2.5]}
    """
    if isinstance(obj, Mapping):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(obj: Any) -> str:
    """Serialize *obj* to a JSON string."""
    return json.dumps(jsonable(obj), indent=2, ensure_ascii=False,
                      allow_nan=False)


def dump(obj: Any, file: FileOrFilename) -> None:
    """Serialize *obj* as JSON and write it to *file*."""
    if isinstance(file, (str, Path)):
        with open(file, 'w', encoding='utf-8') as fh:
            _dump_stream(fh, obj)
    else:
        assert hasattr(file, 'write')
        _dump_stream(file, obj)


def _dump_stream(fh, obj):
    fh.write(dumps(obj))
    fh.write('\n')


def loads(string: str) -> Any:
    """Deserialize a JSON document from *string*."""
    return json.loads(string)


def load(source: FileOrFilename) -> Any:
    """Deserialize a JSON document from *source*."""
    if isinstance(source, (str, Path)):
        with open(source, encoding='utf-8') as fh:
            return json.load(fh)
    else:
        assert hasattr(source, 'read')
        return json.load(source)


def _cell(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(
    rows: Iterable[Sequence[Any]],
    columns: Sequence[str],
    file: FileOrFilename,
) -> None:
    """
    Write *rows* under the header *columns* to *file*.

    ``None`` is written as an empty cell, booleans as ``true`` and
    ``false``, and floats in their shortest round-tripping form.
    """
    if isinstance(file, (str, Path)):
        with open(file, 'w', encoding='utf-8', newline='') as fh:
            _write_csv_stream(fh, rows, columns)
    else:
        assert hasattr(file, 'write')
        _write_csv_stream(file, rows, columns)


def _write_csv_stream(fh, rows, columns):
    writer = csv.writer(fh, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(
                f'expected {len(columns)} values per row, got {len(row)}'
            )
        writer.writerow([_cell(value) for value in row])


def write_runs(rows: Iterable[Sequence[Any]], file: FileOrFilename) -> None:
    """Write per-run batch rows with the :data:`RUN_COLUMNS` header."""
    write_csv(rows, RUN_COLUMNS, file)


def write_sensitivity(sweep: Any, file: FileOrFilename) -> None:
    """Write the rows of a sensitivity sweep."""
    write_csv(sweep.rows, SENSITIVITY_COLUMNS, file)


def write_traces(
    traces: Mapping[str, Sequence[float]], file: FileOrFilename
) -> None:
    """
    Write run-averaged Fourier-error traces, one column per algorithm.

    Shorter traces are padded with empty cells.
    """
    names = list(traces)
    length = max((len(traces[name]) for name in names), default=0)
    rows = []
    for i in range(length):
        row: list = [i + 1]
        for name in names:
            trace = traces[name]
            row.append(float(trace[i]) if i < len(trace) else None)
        rows.append(row)
    write_csv(rows, ['iteration'] + names, file)


def read_csv(source: FileOrFilename) -> list:
    """Return the rows of a CSV file as dictionaries of strings."""
    if isinstance(source, (str, Path)):
        with open(source, encoding='utf-8', newline='') as fh:
            return list(csv.DictReader(fh))
    assert hasattr(source, 'read')
    return list(csv.DictReader(source))


def output_path(directory: Optional[FileOrFilename], name: str) -> Path:
    """Return *directory*/*name*, creating *directory* if needed."""
    base = Path('.') if directory is None else Path(str(directory))
    base.mkdir(parents=True, exist_ok=True)
    return base / name
