import os
from pathlib import Path
from dotenv import load_dotenv

from errors import ConfigError

# Load environment variables from .env file
load_dotenv()

class Config:
    # Paths
    BASE_DIR = Path(__file__).parent
    OUTPUT_DIR = Path(os.getenv("OUTPUT_DIR", str(BASE_DIR / "outputs")))

    # Reproducibility
    DEFAULT_SEED = int(os.getenv("DEFAULT_SEED", "2017"))

    # Dataset / checkpoint file format
    DATASET_FORMAT_VERSION = 1
    CHECKPOINT_FORMAT_VERSION = 1

    # Logging Configuration
    LOG_DIR = os.getenv("LOG_DIR", "logs")
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    LOG_FORMAT = os.getenv("LOG_FORMAT", "human")  # "human" or "json"

    @classmethod
    def validate(cls):
        if cls.LOG_LEVEL.upper() not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ConfigError(f"LOG_LEVEL '{cls.LOG_LEVEL}' is not a logging level.")
        if cls.LOG_FORMAT.lower() not in {"human", "json"}:
            raise ConfigError(f"LOG_FORMAT must be 'human' or 'json', got '{cls.LOG_FORMAT}'.")
