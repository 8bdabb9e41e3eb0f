from functools import lru_cache
from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict

class Settings(BaseSettings):
    model_config=SettingsConfigDict(
        env_file='.env',
        env_file_encoding='utf-8',
        case_sensitive=False,
        extra='ignore',
    )

    # Logging
    LOG_LEVEL:str='INFO'
    LOG_FORMAT:Literal['console', 'json']='console'

    # API Settings
    API_HOST:str='0.0.0.0'
    API_PORT:int=8000

    # Reproducibility defaults (echoed in every CLI output that uses them)
    DEFAULT_SEED:int=0
    OPTIMIZER_STARTS:int=5

    # Sweep points evaluated concurrently; output order never depends on it
    SWEEP_WORKERS:int=1

    # Application Info
    APP_NAME: str = "Electro-Optic Transducer Toolkit"

@lru_cache
def get_settings()->Settings:
    return Settings()
