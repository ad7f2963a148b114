import logging
from . import knudsen_stationary_app


def main(config, out_dir: str) -> list:
    logging.getLogger(__name__).debug(f"knudsen-stationary writing to {out_dir}")
    return knudsen_stationary_app.app(config, out_dir)
