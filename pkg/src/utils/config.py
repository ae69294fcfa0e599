import os

class Config:
    """
    Runtime configuration class.

    Values are read from the environment on every access so that a test or a
    wrapper script can override them without re-importing the package.
    """

    @property
    def APP_TITLE(self) -> str: return os.getenv("APP_TITLE", "condensate-kinetics")

    @property
    def APP_VERSION(self) -> str: return os.getenv("APP_VERSION", "1.0.0")

    @property
    def LOG_LEVEL(self) -> str: return os.getenv("LOG_LEVEL", "INFO")

    @property
    def LOG_FORMAT(self) -> str:
        return os.getenv("LOG_FORMAT", "%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    @property
    def BEC_THREADS(self) -> int: return int(os.getenv("BEC_THREADS", 1))

    @property
    def BEC_OUTPUT_DIR(self) -> str: return os.getenv("BEC_OUTPUT_DIR", "results")

    @property
    def BEC_OVERLAP_TABLE_LIMIT(self) -> int: return int(os.getenv("BEC_OVERLAP_TABLE_LIMIT", 256))

config = Config()
