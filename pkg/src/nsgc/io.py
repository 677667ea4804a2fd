"""Atomic file output and the shared float format."""

import csv
import io
import json
import os
import shutil
import tempfile
from contextlib import contextmanager

FLOAT_FORMAT = ".9g"


def fmt(value):
    """Floats with 9 significant digits; everything else via ``str``."""
    if isinstance(value, float):
        return format(value, FLOAT_FORMAT)
    if hasattr(value, "dtype") and value.dtype.kind == "f":
        return format(float(value), FLOAT_FORMAT)
    if value is None:
        return ""
    return str(value)


def csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_text_atomic(path, text):
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = os.path.abspath(path)
    directory = os.path.dirname(path)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv_atomic(path, header, rows):
    write_text_atomic(path, csv_text(header, rows))


def write_json_atomic(path, data):
    write_text_atomic(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


@contextmanager
def staged_directory(out_dir):
    """Yield a scratch directory; on success its files move into ``out_dir``.

    Nothing reaches ``out_dir`` unless the block completes. Each file is
    moved with an atomic rename.
    """
    out_dir = os.path.abspath(out_dir)
    parent = os.path.dirname(out_dir)
    os.makedirs(parent, exist_ok=True)
    stage = tempfile.mkdtemp(prefix=".stage-", dir=parent)
    try:
        yield stage
        if not os.path.exists(out_dir):
            os.replace(stage, out_dir)
            return
        for name in sorted(os.listdir(stage)):
            os.replace(os.path.join(stage, name), os.path.join(out_dir, name))
    finally:
        if os.path.exists(stage):
            shutil.rmtree(stage)
