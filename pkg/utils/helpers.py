"""
Helper functions for the gaussbesov toolkit
"""

import os
import csv
import json
import math
import hashlib
import logging
from pathlib import Path

import numpy as np


def get_env_int(key, default=0):
    """Get integer environment variable"""
    try:
        return int(os.environ.get(key, default))
    except (ValueError, TypeError):
        return default


def get_env_float(key, default=0.0):
    """Get float environment variable"""
    try:
        return float(os.environ.get(key, default))
    except (ValueError, TypeError):
        return default


def merge_dicts(*dicts):
    """Merge multiple dictionaries, later ones win, nested dicts merged recursively"""
    result = {}
    for d in dicts:
        if not isinstance(d, dict):
            continue
        for key, value in d.items():
            if isinstance(value, dict) and isinstance(result.get(key), dict):
                result[key] = merge_dicts(result[key], value)
            else:
                result[key] = value
    return result


def format_float(value):
    """17 significant digits, enough to round-trip any double"""
    return format(float(value), '.17g')


def to_jsonable(obj):
    """Convert numpy scalars/arrays and non-finite floats into plain JSON values"""
    if isinstance(obj, dict):
        return {str(key): to_jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(value) for value in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return float(format_float(value))
    if hasattr(obj, 'value') and hasattr(obj, 'name'):
        # enum members
        return obj.value
    return obj


def dumps_json(obj):
    """Deterministic JSON text: sorted keys, fixed indentation, no timestamps"""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(obj), encoding='utf-8')
    logging.info(f"Wrote {path}")
    return path


def write_csv(path, header, rows):
    """UTF-8 CSV with a header row; floats written with 17 significant digits"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='') as handle:
        writer = csv.writer(handle, delimiter=',', lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([
                format_float(cell) if isinstance(cell, (float, np.floating)) else cell
                for cell in row
            ])
    logging.info(f"Wrote {path} ({len(rows)} rows)")
    return path


def params_hash(params):
    """Short SHA-256 digest of a parameter mapping, stable across runs"""
    text = json.dumps(to_jsonable(params), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]
