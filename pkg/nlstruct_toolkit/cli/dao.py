"""
Data Access Object for run directories.

A run directory holds the config snapshot, dataset files and their hashes, the
training history, checkpoints, command outputs and the run log.
"""
import json
import logging
from pathlib import Path
from typing import Dict, Union

from ..exceptions import ArtifactIOException
from ..tasks import Dataset, read_dataset, write_dataset
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint

# Set up logging
logger = logging.getLogger(__name__)


class BaseDao:
    """Base Data Access Object reading and writing files below a root directory."""

    def __init__(self, root: Union[str, Path]):
        """
        Initialize the DAO with its root directory.

        Args:
            root: Directory owning every file this DAO touches
        """
        self.root = Path(root)

    def path(self, *parts: str) -> Path:
        return self.root.joinpath(*parts)

    def ensure_dir(self, *parts: str) -> Path:
        directory = self.path(*parts)
        try:
            directory.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logger.error(f"Error creating directory {directory}: {e}")
            raise ArtifactIOException(f"Cannot create directory {directory}") from e
        return directory

    def write_text(self, name: str, text: str) -> Path:
        """
        Write a text file below the root.

        Args:
            name: Relative file name
            text: Contents

        Returns:
            The written path

        Raises:
            ArtifactIOException: If the file cannot be written
        """
        target = self.path(name)
        self.ensure_dir(*Path(name).parent.parts)
        try:
            target.write_text(text, encoding="utf-8")
        except OSError as e:
            logger.error(f"Error writing {target}: {e}")
            raise ArtifactIOException(f"Cannot write {target}") from e
        return target

    def read_text(self, name: str) -> str:
        target = self.path(name)
        try:
            return target.read_text(encoding="utf-8")
        except OSError as e:
            logger.error(f"Error reading {target}: {e}")
            raise ArtifactIOException(f"Cannot read {target}") from e

    def exists(self, name: str) -> bool:
        return self.path(name).exists()


class RunDirectoryDao(BaseDao):
    """Files of one experiment run."""

    CONFIG = "config.json"
    DATASET_HASHES = "dataset_hashes.json"
    HISTORY = "history.tsv"
    LOG = "run.log"
    DATA_DIR = "data"
    CHECKPOINT_DIR = "checkpoints"

    def dataset_path(self, split: str) -> Path:
        return self.path(self.DATA_DIR, f"{split}.nlsd")

    def checkpoint_path(self, name: str) -> Path:
        return self.path(self.CHECKPOINT_DIR, f"{name}.nlck")

    def write_config(self, config_json: str) -> Path:
        return self.write_text(self.CONFIG, config_json)

    def write_datasets(self, splits: Dict[str, Dataset]) -> Dict[str, str]:
        """Write every split and the hash index; returns split -> sha256."""
        self.ensure_dir(self.DATA_DIR)
        hashes = {split: write_dataset(self.dataset_path(split), dataset) for split, dataset in splits.items()}
        self.write_text(self.DATASET_HASHES, json.dumps(hashes, sort_keys=True, indent=2) + "\n")
        return hashes

    def read_dataset(self, split: str) -> Dataset:
        return read_dataset(self.dataset_path(split))

    def has_dataset(self, split: str) -> bool:
        return self.dataset_path(split).exists()

    def write_history(self, table: str) -> Path:
        return self.write_text(self.HISTORY, table)

    def write_checkpoint(self, name: str, checkpoint: Checkpoint) -> Path:
        self.ensure_dir(self.CHECKPOINT_DIR)
        target = self.checkpoint_path(name)
        save_checkpoint(target, checkpoint)
        logger.info(f"Saved checkpoint {target}")
        return target

    def read_checkpoint(self, name: str) -> Checkpoint:
        return load_checkpoint(self.checkpoint_path(name))
