import csv
import logging
import os
from typing import List, Optional, Sequence

from pydantic import BaseModel

from arfima_misspec.config import settings
from arfima_misspec.exceptions import IoError
from arfima_misspec.models.results import MonteCarloReport

logger = logging.getLogger(__name__)


def init_output_dir(directory: Optional[str] = None) -> str:
    """
    Create the output directory if it doesn't exist.

    Args:
        directory: Directory to create; defaults to settings.OUTPUT_DIR

    Returns:
        The directory path
    """
    directory = directory or settings.OUTPUT_DIR
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as e:
        logger.error(f"Error creating output directory {directory}: {str(e)}")
        raise IoError(f"Cannot create {directory}: {e}") from e
    return directory


def save_json(model: BaseModel, path: str) -> str:
    """
    Write a pydantic model as indented JSON.

    Args:
        model: Model to serialize
        path: Target file

    Returns:
        The path written
    """
    try:
        init_output_dir(os.path.dirname(path) or ".")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(model.model_dump_json(indent=2))
    except OSError as e:
        logger.error(f"Error writing {path}: {str(e)}")
        raise IoError(f"Cannot write {path}: {e}") from e
    logger.info(f"Wrote {path}")
    return path


def save_csv(header: Sequence[str], rows: Sequence[Sequence], path: str) -> str:
    """Write rows under a header line; floats keep full precision."""
    try:
        init_output_dir(os.path.dirname(path) or ".")
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    except OSError as e:
        logger.error(f"Error writing {path}: {str(e)}")
        raise IoError(f"Cannot write {path}: {e}") from e
    logger.info(f"Wrote {path} ({len(rows)} rows)")
    return path


def load_csv(path: str) -> List[List[str]]:
    """Rows of a CSV file, header included."""
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            return [row for row in csv.reader(handle)]
    except OSError as e:
        logger.error(f"Error reading {path}: {str(e)}")
        raise IoError(f"Cannot read {path}: {e}") from e


def load_report(path: str) -> MonteCarloReport:
    try:
        with open(path, encoding="utf-8") as handle:
            return MonteCarloReport.model_validate_json(handle.read())
    except OSError as e:
        logger.error(f"Error reading report {path}: {str(e)}")
        raise IoError(f"Cannot read {path}: {e}") from e


def list_outputs(directory: Optional[str] = None, suffix: Optional[str] = None) -> List[str]:
    """
    List artifact files.

    Args:
        directory: Directory to list; defaults to settings.OUTPUT_DIR
        suffix: Optional extension filter such as ".csv"

    Returns:
        Sorted file names, empty if the directory is missing
    """
    directory = directory or settings.OUTPUT_DIR
    if not os.path.isdir(directory):
        return []
    names = sorted(os.listdir(directory))
    if suffix:
        names = [name for name in names if name.endswith(suffix)]
    return names


def delete_output(path: str) -> bool:
    """Delete an artifact; False when it could not be removed."""
    try:
        os.remove(path)
        return True
    except OSError as e:
        logger.error(f"Error deleting {path}: {str(e)}")
        return False
