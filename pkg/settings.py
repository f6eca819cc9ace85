from pydantic import field_validator
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    THREADS: int = 1
    LOG_DIR: str = "logs"
    LOG_LEVEL: str = "DEBUG"
    DETERMINISTIC: bool = True

    class Config:
        env_prefix = "UNINFO_"
        env_file = ".env"
        extra = "ignore"

    @field_validator("THREADS")
    def check_threads(cls, v):
        if v < 1:
            raise ValueError(f"Invalid UNINFO_THREADS={v}, must be >= 1")
        return v

    @field_validator("LOG_LEVEL")
    def check_log_level(cls, v):
        allowed = {"DEBUG", "INFO", "WARNING", "ERROR"}
        if v.upper() not in allowed:
            raise ValueError(f"Invalid UNINFO_LOG_LEVEL='{v}', must be one of {allowed}")
        return v.upper()


settings = Settings()
