import logging
from src.api.cli import main
from src.utils.config import config

# Configure logging
logging.basicConfig(
    level=getattr(logging, config.LOG_LEVEL.upper()),
    format=config.LOG_FORMAT
)

logger: logging.Logger = logging.getLogger(__name__)

if __name__ == "__main__":
    logger.info(f"Starting {config.APP_TITLE} {config.APP_VERSION}")
    raise SystemExit(main())
