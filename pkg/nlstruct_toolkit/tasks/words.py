"""
Word recognition task: five-letter words rendered as perturbed letter images.
"""
import logging
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..constants import TaskKind
from ..exceptions import StructuralException
from .datasets import Dataset
from .glyphs import ALPHABET, IMAGE_SIZE, letter_index, render_letter

# Set up logging
logger = logging.getLogger(__name__)

WORD_LENGTH = 5
SPLITS = ("train", "val", "test")

VOCABULARY = (
    "about", "after", "again", "below", "could", "every", "first", "found", "great", "house",
    "large", "learn", "never", "other", "place", "plant", "point", "right", "small", "sound",
    "spell", "still", "study", "their", "there", "these", "thing", "think", "three", "water",
    "where", "which", "world", "would", "write", "those", "light", "might", "story", "young",
    "began", "often", "until", "river", "carry", "state", "while", "close", "night", "white",
)


class WordTaskSpec(BaseModel):
    """Vocabulary, split sizes and render perturbations of the word task."""
    model_config = ConfigDict(extra="forbid")

    vocabulary: Optional[List[str]] = Field(None, description="Five-letter words; the first n_words built-ins when omitted")
    n_words: int = Field(50, ge=1, le=len(VOCABULARY), description="Built-in words used when vocabulary is omitted")
    train_size: int = Field(1000, ge=1)
    val_size: int = Field(200, ge=0)
    test_size: int = Field(200, ge=0)
    seed: int = Field(0, description="Seed of every render and word draw")
    max_rotation: float = Field(15.0, ge=0, description="Largest absolute rotation in degrees")
    max_shift: float = Field(3.0, ge=0, description="Largest absolute shift in pixels")
    scale_min: float = Field(0.7, gt=0)
    scale_max: float = Field(1.1, gt=0)
    contrast_min: float = Field(0.2, ge=0, le=1, description="Lowest background noise contrast")
    contrast_max: float = Field(0.6, ge=0, le=1, description="Highest background noise contrast")

    @model_validator(mode="after")
    def check_ranges(self) -> "WordTaskSpec":
        if self.scale_min > self.scale_max:
            raise ValueError("scale_min must not exceed scale_max")
        if self.contrast_min > self.contrast_max:
            raise ValueError("contrast_min must not exceed contrast_max")
        return self

    @classmethod
    def reduced(cls, **overrides) -> "WordTaskSpec":
        """The ten-word task with 300/100/100 examples used for quick runs."""
        values = dict(n_words=10, train_size=300, val_size=100, test_size=100)
        values.update(overrides)
        return cls(**values)

    def words(self) -> List[str]:
        return list(self.vocabulary) if self.vocabulary is not None else list(VOCABULARY[:self.n_words])

    def split_sizes(self) -> Dict[str, int]:
        return {"train": self.train_size, "val": self.val_size, "test": self.test_size}


def encode_word(word: str) -> np.ndarray:
    """
    Labels of a word.

    Raises:
        StructuralException: If the word is not five lowercase letters of the embedded font
    """
    if len(word) != WORD_LENGTH:
        raise StructuralException(f"Word {word!r} does not have {WORD_LENGTH} letters")
    return np.array([letter_index(letter) for letter in word], dtype=np.int64)


def decode_word(labels) -> str:
    return "".join(ALPHABET[int(label)] for label in labels)


def render_word(word: str, spec: WordTaskSpec, rng: np.random.Generator) -> np.ndarray:
    """Five flattened letter renders, shape (5, 784)."""
    encode_word(word)
    return np.stack([
        render_letter(letter, rng, spec.max_rotation, spec.max_shift,
                      (spec.scale_min, spec.scale_max), (spec.contrast_min, spec.contrast_max)).ravel()
        for letter in word])


def gen_words(spec: WordTaskSpec) -> Dict[str, Dataset]:
    """
    Generate the train, val and test splits of the word task.

    Each example draws its word and renders from its own stream seeded by
    (seed, split, index), so the output is a pure function of the WordTaskSpec.

    Raises:
        StructuralException: If a vocabulary word contains an unknown character
    """
    words = spec.words()
    for word in words:
        encode_word(word)
    splits = {}
    for split_index, split in enumerate(SPLITS):
        size = spec.split_sizes()[split]
        features = np.empty((size, WORD_LENGTH, IMAGE_SIZE * IMAGE_SIZE))
        labels = np.empty((size, WORD_LENGTH), dtype=np.int64)
        for i in range(size):
            rng = np.random.default_rng([spec.seed, split_index, i])
            word = words[int(rng.integers(len(words)))]
            features[i] = render_word(word, spec, rng)
            labels[i] = encode_word(word)
        splits[split] = Dataset(TaskKind.WORDS, features, labels, len(ALPHABET))
        logger.info(f"Generated {size} {split} words from a vocabulary of {len(words)}")
    return splits
